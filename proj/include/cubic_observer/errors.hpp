#pragma once

#include <stdexcept>
#include <string>

namespace cubic_obs {

/// Mismatched matrix/vector shapes.
class DimensionError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// A caller violated a documented precondition (asymmetric input, gamma <= 0, ...).
class ContractError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Iteration failure, singular or ill-conditioned system.
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A design premise does not hold (e.g. non-Hurwitz error dynamics).
class DesignError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Simulation produced a non-finite or runaway state.
class DivergenceError : public std::runtime_error {
  public:
    DivergenceError(const std::string& what, double last_good_time)
        : std::runtime_error(what), last_good_time_(last_good_time) {}

    [[nodiscard]] double last_good_time() const noexcept { return last_good_time_; }

  private:
    double last_good_time_;
};

}  // namespace cubic_obs
