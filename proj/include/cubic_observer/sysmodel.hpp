#pragma once

#include <variant>
#include <vector>

#include "cubic_observer/numlin.hpp"

namespace cubic_obs {

/// Relative singular-value cutoff used for the observability rank.
inline constexpr double kObservabilityRankTol = 1e-9;

/// [C; CA; ...; CA^{n-1}] for a state matrix `a` and output matrix `c`.
[[nodiscard]] Matrix observability_matrix(const Matrix& a, const Matrix& c);

/// Continuous-time LTI plant  x' = A x + B u,  y = C x.
///
/// Construction checks shapes, finiteness, and observability of (A, C);
/// an unobservable pair throws ContractError.
class LinearSystem {
  public:
    LinearSystem(Matrix a, Matrix b, Matrix c);

    [[nodiscard]] const Matrix& a() const noexcept { return a_; }
    [[nodiscard]] const Matrix& b() const noexcept { return b_; }
    [[nodiscard]] const Matrix& c() const noexcept { return c_; }

    [[nodiscard]] Eigen::Index states() const noexcept { return a_.rows(); }
    [[nodiscard]] Eigen::Index inputs() const noexcept { return b_.cols(); }
    [[nodiscard]] Eigen::Index outputs() const noexcept { return c_.rows(); }

    /// Same B and C, different state matrix. Re-validates.
    [[nodiscard]] LinearSystem with_state_matrix(Matrix a) const { return {std::move(a), b_, c_}; }

  private:
    Matrix a_;
    Matrix b_;
    Matrix c_;
};

[[nodiscard]] inline Matrix observability_matrix(const LinearSystem& sys) {
    return observability_matrix(sys.a(), sys.c());
}

/// Scalar-diagonal uncertainty family  A(eps) = A + eps I,  eps_min <= eps <= eps_max.
///
/// The range is normalized so that eps_min <= 0 <= eps_max: a same-signed range is
/// re-zeroed by folding its nearest bound into the nominal state matrix. `shift()`
/// reports the amount folded in. perturb() takes eps in the normalized coordinates.
class PerturbedFamily {
  public:
    PerturbedFamily(const LinearSystem& nominal, double eps_min, double eps_max);

    [[nodiscard]] const LinearSystem& nominal() const noexcept { return nominal_; }
    [[nodiscard]] double eps_min() const noexcept { return eps_min_; }
    [[nodiscard]] double eps_max() const noexcept { return eps_max_; }
    [[nodiscard]] double shift() const noexcept { return shift_; }
    [[nodiscard]] bool contains(double eps) const noexcept { return eps_min_ <= eps && eps <= eps_max_; }

  private:
    LinearSystem nominal_;
    double eps_min_;
    double eps_max_;
    double shift_ = 0.0;
};

/// A + eps I with the family's B and C. Values outside [eps_min, eps_max] are
/// allowed (sweeps past the certified range are legitimate) but logged to std::clog.
[[nodiscard]] LinearSystem perturb(const PerturbedFamily& family, double eps);

/// Deterministic exogenous input u(t).
class InputSignal {
  public:
    struct Zero {};
    struct Sinusoid {
        double amplitude;
        double angular_frequency;
        double phase;
    };
    struct Constant {
        Vector level;
    };
    /// Zero-order hold; queries before the first sample return the first value.
    struct Sampled {
        std::vector<double> times;
        std::vector<Vector> values;
    };
    using Kind = std::variant<Zero, Sinusoid, Constant, Sampled>;

    static InputSignal zero(Eigen::Index dimension);
    /// Every channel carries amplitude * sin(omega t + phase).
    static InputSignal sinusoid(double amplitude, double angular_frequency, double phase,
                                Eigen::Index dimension = 1);
    static InputSignal constant(Vector level);
    static InputSignal sampled(std::vector<double> times, std::vector<Vector> values);

    [[nodiscard]] Eigen::Index dimension() const noexcept { return dimension_; }
    [[nodiscard]] const Kind& kind() const noexcept { return kind_; }

    [[nodiscard]] Vector evaluate(double t) const;

  private:
    InputSignal(Kind kind, Eigen::Index dimension) : kind_(std::move(kind)), dimension_(dimension) {}

    Kind kind_;
    Eigen::Index dimension_;
};

}  // namespace cubic_obs
