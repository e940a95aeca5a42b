#pragma once

#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "cubic_observer/design.hpp"
#include "cubic_observer/numlin.hpp"
#include "cubic_observer/sysmodel.hpp"

namespace cubic_obs {

/// States with norm above this abort the run as divergent.
inline constexpr double kDivergenceNorm = 1e12;
/// Absolute band used for the settling time.
inline constexpr double kSettleBand = 0.05;

struct SimConfig {
    double dt = 1e-3;
    double horizon = 10.0;
    Vector x0;
    /// Defaults to the zero vector when empty.
    Vector xhat0;
    InputSignal input = InputSignal::zero(1);
    /// Applied to the plant only: A + eps I.
    std::optional<double> eps;
};

/// Uniform-step time series produced by integrate_rk4: one row per sample.
struct RawTrajectory {
    std::vector<double> times;
    Matrix states;
};

/// Sampled simulation output; matrices hold one row per sample.
struct Trace {
    std::vector<double> times;
    Matrix plant_states;
    Matrix estimates;
    Matrix errors;
    Matrix outputs;
    Matrix inputs;
    /// V = e^T P e; empty when no P was available.
    Vector lyapunov;
    /// 1 - exp(-e^T P e).
    Vector lyapunov_zubov;
    /// u = -K xhat for closed-loop runs; empty otherwise.
    Matrix control;

    [[nodiscard]] std::size_t size() const noexcept { return times.size(); }
    [[nodiscard]] bool has_lyapunov() const noexcept { return lyapunov.size() > 0; }
    [[nodiscard]] bool has_control() const noexcept { return control.rows() > 0; }
};

/// Thrown when a run produces a non-finite or runaway state. Carries the samples up
/// to and including the last finite one.
class SimulationDiverged : public DivergenceError {
  public:
    SimulationDiverged(const std::string& what, double last_good_time, Trace partial)
        : DivergenceError(what, last_good_time), partial_(std::move(partial)) {}

    [[nodiscard]] const Trace& partial() const noexcept { return partial_; }

  private:
    Trace partial_;
};

using VectorField = std::function<Vector(double, const Vector&)>;

/// Classical fixed-step RK4 from t = 0 to cfg.horizon. The last step is shortened
/// to land exactly on the horizon. Sample k sits at k * dt (not an accumulated sum).
/// Throws DivergenceError on a non-finite state or norm > kDivergenceNorm; the
/// exception's last_good_time() is the last finite sample time.
[[nodiscard]] RawTrajectory integrate_rk4(const VectorField& derivative, const Vector& x0, double dt,
                                          double horizon);
[[nodiscard]] RawTrajectory integrate_rk4(const VectorField& derivative, const Vector& x0, const SimConfig& cfg);

/// Plant with a linear Luenberger observer. `lyapunov_p`, when given, fills V and V_cz.
[[nodiscard]] Trace simulate_linear_observer(const LinearSystem& sys, const LinearObserverDesign& obs,
                                             const SimConfig& cfg,
                                             const std::optional<Matrix>& lyapunov_p = std::nullopt);

/// Plant with the cubic observer; the cubic correction uses only the output residual.
[[nodiscard]] Trace simulate_cubic_observer(const LinearSystem& sys, const CubicObserverDesign& design,
                                            const SimConfig& cfg);

/// Plant driven by u = -K xhat (plus cfg.input) with the cubic observer in the loop.
[[nodiscard]] Trace simulate_closed_loop(const LinearSystem& sys, const CubicObserverDesign& design,
                                         const Matrix& k, const SimConfig& cfg);

/// Plant and observer model both use A + eps I from the family; the observer keeps the
/// nominal-designed gains, so the error obeys e' = (A + eps I - Lc C) e - (r^T Theta r) Nc r.
[[nodiscard]] Trace simulate_perturbed(const PerturbedFamily& family, const CubicObserverDesign& design,
                                       double eps, const SimConfig& cfg);

struct LqrWeights {
    Matrix q;
    Matrix r;
};

struct Metrics {
    /// max_t |e_i(t)|, initial sample included.
    Vector peak_error;
    /// max |e_i(t)| after the first sign change of e_i; equals peak_error when e_i never changes sign.
    Vector overshoot_peak;
    /// Start of the last stay inside the band; nullopt when the error is outside at the end.
    std::vector<std::optional<double>> settling_time;
    /// J_i(t) = int_0^t e_i^2, one row per sample (trapezoidal).
    Matrix cumulative_squared;
    /// J(t) = sum_i J_i(t).
    Vector cumulative_total;
    std::optional<double> lqr_cost;

    [[nodiscard]] double total_cost() const { return cumulative_total.size() ? cumulative_total(cumulative_total.size() - 1) : 0.0; }
};

[[nodiscard]] Metrics compute_metrics(const Trace& trace, double settle_threshold = kSettleBand,
                                      const std::optional<LqrWeights>& lqr = std::nullopt);

/// Settling time of a single error series under the last-entry rule.
[[nodiscard]] std::optional<double> settling_time(std::span<const double> times, const Vector& error,
                                                  double threshold = kSettleBand);

struct LyapunovDerivative {
    double vdot_cubic;
    double vdot_linear_bound;
};

/// Analytic V' for V = e^T P e along the cubic error dynamics at e, and the linear
/// comparator -e^T Q e.
[[nodiscard]] LyapunovDerivative lyapunov_derivative_at(const LinearSystem& sys, const CubicObserverDesign& design,
                                                        const Vector& e);

}  // namespace cubic_obs
