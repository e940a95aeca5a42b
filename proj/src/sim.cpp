#include "cubic_observer/sim.hpp"

#include <cmath>
#include <sstream>

namespace cubic_obs {

namespace {

struct Integration {
    RawTrajectory trajectory;
    bool diverged = false;
    std::string failure;
};

bool runaway(const Vector& z) { return !z.allFinite() || z.norm() > kDivergenceNorm; }

/// Number of full dt steps and whether a shortened final step is needed.
std::pair<long, bool> step_plan(double dt, double horizon) {
    const long full = static_cast<long>(std::floor(horizon / dt + 1e-9));
    const bool partial = horizon - static_cast<double>(full) * dt > 1e-12 * std::max(1.0, horizon);
    return {full, partial};
}

void check_step(double dt, double horizon) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ContractError("simulation: dt must be positive");
    if (!(horizon >= dt) || !std::isfinite(horizon)) throw ContractError("simulation: horizon must be >= dt");
}

Integration integrate(const VectorField& f, const Vector& x0, double dt, double horizon) {
    check_step(dt, horizon);
    const auto [full, partial] = step_plan(dt, horizon);
    const long samples = full + 1 + (partial ? 1 : 0);

    Integration out;
    auto& traj = out.trajectory;
    traj.times.reserve(static_cast<std::size_t>(samples));
    traj.states.resize(samples, x0.size());

    Vector x = x0;
    double t = 0.0;
    traj.times.push_back(t);
    traj.states.row(0) = x.transpose();
    if (runaway(x)) {
        out.diverged = true;
        out.failure = "initial state is not finite";
        traj.states.conservativeResize(0, x0.size());
        traj.times.clear();
        return out;
    }
    for (long k = 1; k < samples; ++k) {
        const double t_next = (k <= full) ? static_cast<double>(k) * dt : horizon;
        const double h = t_next - t;
        const Vector k1 = f(t, x);
        const Vector k2 = f(t + 0.5 * h, x + (0.5 * h) * k1);
        const Vector k3 = f(t + 0.5 * h, x + (0.5 * h) * k2);
        const Vector k4 = f(t + h, x + h * k3);
        const Vector next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (runaway(next)) {
            std::ostringstream os;
            os << "simulation diverged after t = " << t;
            out.diverged = true;
            out.failure = os.str();
            traj.states.conservativeResize(k, Eigen::NoChange);
            return out;
        }
        x = next;
        t = t_next;
        traj.times.push_back(t);
        traj.states.row(k) = x.transpose();
    }
    return out;
}

/// Observer correction model shared by the linear and cubic runs.
struct ObserverModel {
    Matrix gain;
    /// Present for cubic observers: -(r^T Theta r) Nc r is added to xhat'.
    std::optional<std::pair<Matrix, Matrix>> cubic;  // (Nc, Theta)
};

struct RunSetup {
    Matrix plant_a;
    Matrix observer_a;
    const LinearSystem* nominal;
    ObserverModel observer;
    const Matrix* feedback = nullptr;
    std::optional<Matrix> lyapunov_p;
};

Trace run(const RunSetup& s, const SimConfig& cfg) {
    const LinearSystem& sys = *s.nominal;
    const Eigen::Index n = sys.states();
    if (cfg.x0.size() != n) throw DimensionError("SimConfig: x0 must have n entries");
    const Vector xhat0 = cfg.xhat0.size() == 0 ? Vector::Zero(n) : cfg.xhat0;
    if (xhat0.size() != n) throw DimensionError("SimConfig: xhat0 must have n entries");
    if (cfg.input.dimension() != sys.inputs()) throw DimensionError("SimConfig: input dimension must equal n_u");
    check_step(cfg.dt, cfg.horizon);

    const Matrix& a = s.observer_a;
    const Matrix& b = sys.b();
    const Matrix& c = sys.c();
    const Matrix& ap = s.plant_a;
    const Matrix& l = s.observer.gain;

    auto control = [&](const Vector& xhat) -> Vector {
        if (s.feedback == nullptr) return Vector::Zero(sys.inputs());
        return -(*s.feedback) * xhat;
    };

    const VectorField field = [&](double t, const Vector& z) -> Vector {
        const auto x = z.head(n);
        const auto xhat = z.tail(n);
        const Vector u = cfg.input.evaluate(t) + control(xhat);
        const Vector r = c * (x - xhat);
        Vector dz(2 * n);
        dz.head(n) = ap * x + b * u;
        dz.tail(n) = a * xhat + b * u + l * r;
        if (s.observer.cubic) {
            const auto& [nc, theta] = *s.observer.cubic;
            dz.tail(n) -= r.dot(theta * r) * (nc * r);
        }
        return dz;
    };

    Vector z0(2 * n);
    z0 << cfg.x0, xhat0;
    Integration integ = integrate(field, z0, cfg.dt, cfg.horizon);
    const RawTrajectory& raw = integ.trajectory;
    const Eigen::Index m = raw.states.rows();

    Trace tr;
    tr.times = raw.times;
    tr.plant_states = raw.states.leftCols(n);
    tr.estimates = raw.states.rightCols(n);
    tr.errors = tr.plant_states - tr.estimates;
    tr.outputs = tr.plant_states * c.transpose();
    tr.inputs.resize(m, sys.inputs());
    for (Eigen::Index k = 0; k < m; ++k) tr.inputs.row(k) = cfg.input.evaluate(tr.times[static_cast<std::size_t>(k)]).transpose();
    if (s.feedback != nullptr) tr.control = -tr.estimates * s.feedback->transpose();
    if (s.lyapunov_p) {
        tr.lyapunov = (tr.errors * *s.lyapunov_p).cwiseProduct(tr.errors).rowwise().sum();
        tr.lyapunov_zubov = (-tr.lyapunov.array()).exp().matrix();
        tr.lyapunov_zubov = (1.0 - tr.lyapunov_zubov.array()).matrix();
    }
    if (integ.diverged) {
        const double last = tr.times.empty() ? 0.0 : tr.times.back();
        throw SimulationDiverged(integ.failure, last, std::move(tr));
    }
    return tr;
}

Matrix plant_matrix(const LinearSystem& sys, const SimConfig& cfg) {
    Matrix a = sys.a();
    if (cfg.eps && *cfg.eps != 0.0) a.diagonal().array() += *cfg.eps;
    return a;
}

ObserverModel cubic_model(const LinearSystem& sys, const CubicObserverDesign& d) {
    if (d.gain_lc.rows() != sys.states() || d.gain_lc.cols() != sys.outputs() ||
        d.gain_nc.rows() != sys.states() || d.gain_nc.cols() != sys.outputs() ||
        d.theta.rows() != sys.outputs() || d.theta.cols() != sys.outputs())
        throw DimensionError("cubic design does not match the system dimensions");
    return {d.gain_lc, std::make_pair(d.gain_nc, d.theta)};
}

}  // namespace

RawTrajectory integrate_rk4(const VectorField& derivative, const Vector& x0, double dt, double horizon) {
    Integration integ = integrate(derivative, x0, dt, horizon);
    if (integ.diverged) {
        const double last = integ.trajectory.times.empty() ? 0.0 : integ.trajectory.times.back();
        throw DivergenceError(integ.failure, last);
    }
    return std::move(integ.trajectory);
}

RawTrajectory integrate_rk4(const VectorField& derivative, const Vector& x0, const SimConfig& cfg) {
    return integrate_rk4(derivative, x0, cfg.dt, cfg.horizon);
}

Trace simulate_linear_observer(const LinearSystem& sys, const LinearObserverDesign& obs, const SimConfig& cfg,
                               const std::optional<Matrix>& lyapunov_p) {
    if (obs.gain_l.rows() != sys.states() || obs.gain_l.cols() != sys.outputs())
        throw DimensionError("linear observer gain must be n x n_y");
    RunSetup s{plant_matrix(sys, cfg), sys.a(), &sys, {obs.gain_l, std::nullopt}, nullptr, lyapunov_p};
    return run(s, cfg);
}

Trace simulate_cubic_observer(const LinearSystem& sys, const CubicObserverDesign& design, const SimConfig& cfg) {
    RunSetup s{plant_matrix(sys, cfg), sys.a(), &sys, cubic_model(sys, design), nullptr, design.lyapunov_p};
    return run(s, cfg);
}

Trace simulate_closed_loop(const LinearSystem& sys, const CubicObserverDesign& design, const Matrix& k,
                           const SimConfig& cfg) {
    if (k.rows() != sys.inputs() || k.cols() != sys.states()) throw DimensionError("K must be n_u x n");
    RunSetup s{plant_matrix(sys, cfg), sys.a(), &sys, cubic_model(sys, design), &k, design.lyapunov_p};
    return run(s, cfg);
}

Trace simulate_perturbed(const PerturbedFamily& family, const CubicObserverDesign& design, double eps,
                         const SimConfig& cfg) {
    const LinearSystem plant = perturb(family, eps);
    RunSetup s{plant.a(), plant.a(), &family.nominal(), cubic_model(family.nominal(), design), nullptr, design.lyapunov_p};
    return run(s, cfg);
}

std::optional<double> settling_time(std::span<const double> times, const Vector& error, double threshold) {
    const Eigen::Index m = error.size();
    if (static_cast<std::size_t>(m) != times.size()) throw DimensionError("settling_time: length mismatch");
    Eigen::Index last_out = -1;
    for (Eigen::Index k = m - 1; k >= 0; --k) {
        if (!(std::abs(error(k)) < threshold)) {
            last_out = k;
            break;
        }
    }
    if (last_out < 0) return times.empty() ? std::optional<double>{} : std::optional<double>{times.front()};
    if (last_out == m - 1) return std::nullopt;
    return times[static_cast<std::size_t>(last_out + 1)];
}

Metrics compute_metrics(const Trace& trace, double settle_threshold, const std::optional<LqrWeights>& lqr) {
    const Eigen::Index m = static_cast<Eigen::Index>(trace.size());
    if (m == 0) throw ContractError("compute_metrics: empty trace");
    const Eigen::Index n = trace.errors.cols();
    Metrics out;
    out.peak_error = trace.errors.cwiseAbs().colwise().maxCoeff().transpose();
    out.overshoot_peak = out.peak_error;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto col = trace.errors.col(i);
        for (Eigen::Index k = 1; k < m; ++k) {
            if (col(k) * col(0) < 0.0 || (col(0) == 0.0 && col(k) != 0.0)) {
                out.overshoot_peak(i) = col.tail(m - k).cwiseAbs().maxCoeff();
                break;
            }
        }
        out.settling_time.push_back(settling_time(trace.times, Vector(col), settle_threshold));
    }

    out.cumulative_squared = Matrix::Zero(m, n);
    const Matrix sq = trace.errors.cwiseAbs2();
    for (Eigen::Index k = 1; k < m; ++k) {
        const double h = trace.times[static_cast<std::size_t>(k)] - trace.times[static_cast<std::size_t>(k - 1)];
        out.cumulative_squared.row(k) = out.cumulative_squared.row(k - 1) + 0.5 * h * (sq.row(k) + sq.row(k - 1));
    }
    out.cumulative_total = out.cumulative_squared.rowwise().sum();

    if (lqr) {
        if (!trace.has_control()) throw ContractError("compute_metrics: LQR cost requested but trace has no control");
        if (lqr->q.rows() != trace.plant_states.cols() || lqr->r.rows() != trace.control.cols())
            throw DimensionError("compute_metrics: LQR weight dimensions do not match the trace");
        const Vector integrand = (trace.plant_states * lqr->q).cwiseProduct(trace.plant_states).rowwise().sum() +
                                 (trace.control * lqr->r).cwiseProduct(trace.control).rowwise().sum();
        double cost = 0.0;
        for (Eigen::Index k = 1; k < m; ++k) {
            const double h = trace.times[static_cast<std::size_t>(k)] - trace.times[static_cast<std::size_t>(k - 1)];
            cost += 0.5 * h * (integrand(k) + integrand(k - 1));
        }
        out.lqr_cost = cost;
    }
    return out;
}

LyapunovDerivative lyapunov_derivative_at(const LinearSystem& sys, const CubicObserverDesign& design,
                                          const Vector& e) {
    if (e.size() != sys.states()) throw DimensionError("lyapunov_derivative_at: e must have n entries");
    const Matrix& p = design.lyapunov_p;
    const Matrix f = sys.a() - design.gain_lc * sys.c();
    const Vector ce = sys.c() * e;
    const double weight = ce.dot(design.theta * ce);
    const Vector pe = p * e;
    // e^T (F^T P + P F) e = 2 (Pe)^T F e;  e^T (P Nc C + C^T Nc^T P) e = 2 (Pe)^T Nc C e.
    const double linear_part = 2.0 * pe.dot(f * e);
    const double cubic_part = weight * 2.0 * pe.dot(design.gain_nc * ce);
    return {linear_part + cubic_part, -e.dot(design.lyapunov_q * e)};
}

}  // namespace cubic_obs
