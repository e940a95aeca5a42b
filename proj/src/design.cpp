#include "cubic_observer/design.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace cubic_obs {

namespace {

void require_conjugate_closed(std::span<const std::complex<double>> poles) {
    std::vector<bool> used(poles.size(), false);
    for (std::size_t i = 0; i < poles.size(); ++i) {
        if (used[i]) continue;
        const auto p = poles[i];
        if (!std::isfinite(p.real()) || !std::isfinite(p.imag()))
            throw ContractError("place_poles: desired poles must be finite");
        const double tol = 1e-9 * std::max(1.0, std::abs(p));
        used[i] = true;
        if (std::abs(p.imag()) <= tol) continue;
        bool matched = false;
        for (std::size_t j = i + 1; j < poles.size() && !matched; ++j) {
            if (!used[j] && std::abs(poles[j] - std::conj(p)) <= tol) {
                used[j] = true;
                matched = true;
            }
        }
        if (!matched) {
            std::ostringstream os;
            os << "place_poles: pole " << p << " has no conjugate partner";
            throw ContractError(os.str());
        }
    }
}

/// Real coefficients c_0..c_n (c_n = 1) of prod (s - p_i).
std::vector<double> monic_polynomial(std::span<const std::complex<double>> roots) {
    std::vector<std::complex<double>> c{1.0};
    for (const auto& r : roots) {
        std::vector<std::complex<double>> next(c.size() + 1, 0.0);
        for (std::size_t k = 0; k < c.size(); ++k) {
            next[k + 1] += c[k];
            next[k] -= r * c[k];
        }
        c = std::move(next);
    }
    std::vector<double> out(c.size());
    std::transform(c.begin(), c.end(), out.begin(), [](const auto& z) { return z.real(); });
    return out;
}

Matrix error_matrix(const LinearSystem& sys, const Matrix& gain) { return sys.a() - gain * sys.c(); }

void check_gain_shape(const LinearSystem& sys, const Matrix& gain, const char* what) {
    if (gain.rows() != sys.states() || gain.cols() != sys.outputs()) {
        std::ostringstream os;
        os << what << ": expected " << sys.states() << "x" << sys.outputs() << ", got " << gain.rows() << "x"
           << gain.cols();
        throw DimensionError(os.str());
    }
    require_finite(gain, what);
}

Matrix checked_theta(const LinearSystem& sys, const Matrix& theta) {
    if (theta.rows() != sys.outputs() || theta.cols() != sys.outputs())
        throw DimensionError("theta must be n_y x n_y");
    require_finite(theta, "theta");
    Matrix sym = symmetrized(theta, "theta");
    if (positive_definite_margin(sym) < -kDefiniteTol) throw ContractError("theta must be positive semidefinite");
    return sym;
}

/// Lyapunov pair for A - Lc C; rethrows the premise violation with the condition named.
Matrix lyapunov_for(const LinearSystem& sys, const Matrix& gain_lc, const Matrix& q) {
    try {
        return solve_lyapunov(error_matrix(sys, gain_lc), q);
    } catch (const DesignError& e) {
        throw DesignError(std::string("Hurwitz condition fails: A - Lc C is not Hurwitz; ") + e.what());
    }
}

/// M^T S + S M for symmetric S, formed as X + X^T with X = S M so the result is exactly symmetric.
Matrix lyapunov_form(const Matrix& m, const Matrix& s) {
    const Matrix x = s * m;
    return x + x.transpose();
}

Matrix damping_matrix(const LinearSystem& sys, const CubicObserverDesign& d) {
    const Matrix pnc = d.lyapunov_p * d.gain_nc * sys.c();
    return pnc + pnc.transpose();
}

}  // namespace

LinearObserverDesign place_poles_single_output(const LinearSystem& sys,
                                               std::span<const std::complex<double>> desired) {
    if (sys.outputs() != 1)
        throw ContractError("place_poles_single_output: n_y != 1 is unsupported; supply the gain directly");
    const Eigen::Index n = sys.states();
    if (static_cast<Eigen::Index>(desired.size()) != n) throw DimensionError("place_poles: need exactly n poles");
    require_conjugate_closed(desired);

    // Ackermann (dual): L = phi(A) O^{-1} e_n with phi the desired characteristic polynomial.
    const auto coeffs = monic_polynomial(desired);
    const Matrix& a = sys.a();
    Matrix phi = Matrix::Identity(n, n) * coeffs[static_cast<std::size_t>(n)];
    for (Eigen::Index k = n - 1; k >= 0; --k) phi = phi * a + coeffs[static_cast<std::size_t>(k)] * Matrix::Identity(n, n);

    const Matrix obs = observability_matrix(sys);
    const Eigen::FullPivLU<Matrix> lu(obs);
    Vector e_n = Vector::Zero(n);
    e_n(n - 1) = 1.0;
    Vector v = lu.solve(e_n);
    v += lu.solve(Vector(e_n - obs * v));
    return {phi * v};
}

CubicObserverDesign synthesize_cubic_gain(const LinearSystem& sys, const Matrix& gain_lc, const Matrix& q,
                                          const Matrix& theta, double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma))
        throw ContractError("synthesize_cubic_gain: gamma must be > 0 (use degenerate_linear for gamma = 0)");
    check_gain_shape(sys, gain_lc, "gain_lc");
    CubicObserverDesign d;
    d.gain_lc = gain_lc;
    d.theta = checked_theta(sys, theta);
    d.gamma = gamma;
    d.lyapunov_q = symmetrized(q, "q");
    d.lyapunov_p = lyapunov_for(sys, gain_lc, d.lyapunov_q);
    // P^{-1} C^T Theta computed as a solve against the SPD P.
    const Matrix ct_theta = sys.c().transpose() * d.theta;
    const Eigen::LLT<Matrix> llt(d.lyapunov_p);
    if (llt.info() != Eigen::Success) throw NumericalError("synthesize_cubic_gain: P is not positive definite");
    d.gain_nc = -gamma * llt.solve(ct_theta);
    d.origin = CubicObserverDesign::Origin::Synthesized;
    return d;
}

CubicObserverDesign degenerate_linear(const LinearSystem& sys, const Matrix& gain_lc, const Matrix& q,
                                      const Matrix& theta) {
    check_gain_shape(sys, gain_lc, "gain_lc");
    CubicObserverDesign d;
    d.gain_lc = gain_lc;
    d.theta = checked_theta(sys, theta);
    d.gamma = 0.0;
    d.lyapunov_q = symmetrized(q, "q");
    d.lyapunov_p = lyapunov_for(sys, gain_lc, d.lyapunov_q);
    d.gain_nc = Matrix::Zero(sys.states(), sys.outputs());
    d.origin = CubicObserverDesign::Origin::Degenerate;
    return d;
}

CubicObserverDesign explicit_cubic_design(const LinearSystem& sys, const Matrix& gain_lc, const Matrix& gain_nc,
                                          const Matrix& theta, const Matrix& q, double gamma,
                                          bool allow_semidefinite_damping) {
    check_gain_shape(sys, gain_lc, "gain_lc");
    check_gain_shape(sys, gain_nc, "gain_nc");
    CubicObserverDesign d;
    d.gain_lc = gain_lc;
    d.gain_nc = gain_nc;
    d.theta = checked_theta(sys, theta);
    d.gamma = gamma;
    d.lyapunov_q = symmetrized(q, "q");
    d.lyapunov_p = lyapunov_for(sys, gain_lc, d.lyapunov_q);
    d.origin = CubicObserverDesign::Origin::Explicit;
    d.allow_semidefinite_damping = allow_semidefinite_damping;
    return d;
}

Certificate certify_stability(const LinearSystem& sys, const CubicObserverDesign& design) {
    Certificate cert;
    const Eigen::Index n = sys.states();
    const Matrix f = error_matrix(sys, design.gain_lc);
    const Matrix& p = design.lyapunov_p;

    cert.margins["hurwitz_abscissa"] = -eigenvalues(f).max_real();
    cert.margins["p_definite"] = positive_definite_margin(p);
    cert.margins["q_min_eigenvalue"] = symmetric_eigenvalues(design.lyapunov_q).minCoeff();

    // Lyapunov decrease: (A - Lc C)^T P + P (A - Lc C) < 0.
    const Matrix decrease = lyapunov_form(f, p);
    cert.margins["lyapunov_decrease"] = positive_definite_margin(Matrix(-decrease));
    cert.hurwitz_ok = cert.margins["hurwitz_abscissa"] > 0.0 && cert.margins["p_definite"] > kDefiniteTol &&
                      cert.margins["lyapunov_decrease"] > kDefiniteTol;
    if (!cert.hurwitz_ok) cert.notes.emplace_back("Hurwitz condition fails: A - Lc C is not certified Hurwitz");

    // Damping: P Nc C + C^T Nc^T P < 0 (or <= 0 when C^T Theta C is rank deficient).
    const Matrix weight = sys.c().transpose() * design.theta * sys.c();
    const bool full_rank_weight = numeric_rank(weight) == n;
    const double damping_margin = positive_definite_margin(Matrix(-damping_matrix(sys, design)));
    cert.margins["damping"] = damping_margin;
    cert.damping_strict_holds = damping_margin > kDefiniteTol;
    cert.damping_strict_test =
        full_rank_weight ||
        (design.origin == CubicObserverDesign::Origin::Explicit && !design.allow_semidefinite_damping);
    cert.damping_ok = cert.damping_strict_test ? cert.damping_strict_holds : damping_margin >= -kDefiniteTol;
    if (!cert.damping_ok) {
        cert.notes.emplace_back(cert.damping_strict_test
                                    ? "damping condition fails: P Nc C + C^T Nc^T P is not negative definite"
                                    : "damping condition fails: P Nc C + C^T Nc^T P is not negative semidefinite");
    } else if (!cert.damping_strict_test) {
        cert.notes.emplace_back("damping condition accepted in the semidefinite sense (C^T Theta C rank deficient)");
    }

    // Unique equilibrium: C^T Theta C (A - Lc C)^{-1} Nc C positive semidefinite as a quadratic form.
    if (cert.margins["hurwitz_abscissa"] > 0.0) {
        const Matrix m = weight * f.partialPivLu().solve(Matrix(design.gain_nc * sys.c()));
        cert.margins["uniqueness"] = positive_definite_margin(Matrix(m + m.transpose()));
        cert.uniqueness_ok = cert.margins["uniqueness"] >= -kDefiniteTol;
        if (design.origin == CubicObserverDesign::Origin::Synthesized) {
            // For Nc = -gamma P^{-1} C^T Theta this is equivalent to P (A - Lc C) < 0.
            const Matrix pf = p * f;
            cert.margins["p_times_f_quadform"] = positive_definite_margin(Matrix(-(pf + pf.transpose())));
        }
    } else {
        cert.uniqueness_ok = false;
    }
    if (!cert.uniqueness_ok) cert.notes.emplace_back("uniqueness condition not certified: sufficient condition fails");
    return cert;
}

double robustness_bound(const CubicObserverDesign& design) {
    const double qmin = symmetric_eigenvalues(design.lyapunov_q).minCoeff();
    const double pmax = symmetric_eigenvalues(design.lyapunov_p).maxCoeff();
    return std::max(0.0, qmin / (2.0 * pmax));
}

std::vector<double> feedback_beta_grid() {
    std::vector<double> grid;
    double beta = 1.0;
    for (int k = 0; k <= 8; ++k, beta *= 10.0) grid.push_back(beta);
    return grid;
}

Matrix feedback_block_matrix(const LinearSystem& sys, const CubicObserverDesign& design, const Matrix& k,
                             const Matrix& p1, double beta) {
    const Eigen::Index n = sys.states();
    const Matrix acl = sys.a() - sys.b() * k;
    const Matrix f = error_matrix(sys, design.gain_lc);
    const Matrix& p = design.lyapunov_p;
    Matrix psi(2 * n, 2 * n);
    psi.topLeftCorner(n, n) = lyapunov_form(acl, p1);
    psi.topRightCorner(n, n) = p1 * sys.b() * k;
    psi.bottomLeftCorner(n, n) = psi.topRightCorner(n, n).transpose();
    psi.bottomRightCorner(n, n) = beta * lyapunov_form(f, p);
    return psi;
}

Certificate feedback_certificate(const LinearSystem& sys, const CubicObserverDesign& design, const Matrix& k) {
    if (k.rows() != sys.inputs() || k.cols() != sys.states()) throw DimensionError("K must be n_u x n");
    require_finite(k, "K");
    Certificate cert = certify_stability(sys, design);
    const Eigen::Index n = sys.states();
    const Matrix acl = sys.a() - sys.b() * k;
    const double abscissa = -eigenvalues(acl).max_real();
    cert.margins["feedback_hurwitz_abscissa"] = abscissa;
    cert.feedback_ok = false;
    if (!(abscissa > 0.0)) {
        cert.notes.emplace_back("feedback not certified: A - B K is not Hurwitz");
        return cert;
    }
    if (!(cert.margins["hurwitz_abscissa"] > 0.0)) {
        cert.notes.emplace_back("feedback not certified: A - Lc C is not Hurwitz");
        return cert;
    }

    const Matrix p1 = solve_lyapunov(acl, Matrix::Identity(n, n));
    double best = -std::numeric_limits<double>::infinity();
    double chosen_beta = 1.0;
    for (const double beta : feedback_beta_grid()) {
        const double margin = positive_definite_margin(Matrix(-feedback_block_matrix(sys, design, k, p1, beta)));
        if (margin > best) {
            best = margin;
            chosen_beta = beta;
        }
        if (margin > kDefiniteTol) {
            cert.feedback_ok = true;
            cert.feedback_beta = beta;
            chosen_beta = beta;
            break;
        }
    }
    cert.margins["feedback_block"] = best;
    if (!*cert.feedback_ok)
        cert.notes.emplace_back("feedback block condition not certified on the beta grid (not a proof of instability)");

    // Linear-feedback/linear-observer augmented system A_a with P_a = diag(P1, beta P).
    Matrix aa = Matrix::Zero(2 * n, 2 * n);
    aa.topLeftCorner(n, n) = acl;
    aa.topRightCorner(n, n) = sys.b() * k;
    aa.bottomRightCorner(n, n) = error_matrix(sys, design.gain_lc);
    Matrix pa = Matrix::Zero(2 * n, 2 * n);
    pa.topLeftCorner(n, n) = p1;
    pa.bottomRightCorner(n, n) = chosen_beta * design.lyapunov_p;
    const Matrix aug = lyapunov_form(aa, pa);
    cert.margins["corollary_block"] = positive_definite_margin(Matrix(-aug));
    cert.corollary_ok = cert.margins["corollary_block"] > kDefiniteTol;
    return cert;
}

EquilibriumSearchResult search_nonzero_equilibria(const LinearSystem& sys, const CubicObserverDesign& design,
                                                  std::uint64_t seed, int seeds) {
    const Eigen::Index n = sys.states();
    const Matrix f = error_matrix(sys, design.gain_lc);
    const Matrix weight = sys.c().transpose() * design.theta * sys.c();
    const Matrix ncc = design.gain_nc * sys.c();
    const double scale = std::max(1.0, inf_norm(f));

    auto residual = [&](const Vector& v) -> Vector { return f * v + v.dot(weight * v) * (ncc * v); };
    auto jacobian = [&](const Vector& v) -> Matrix {
        return f + v.dot(weight * v) * ncc + (ncc * v) * (2.0 * weight * v).transpose();
    };

    EquilibriumSearchResult out;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double seed_scales[] = {0.1, 1.0, 10.0};
    for (int s = 0; s < seeds; ++s) {
        ++out.seeds_tried;
        Vector v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng) * seed_scales[s % 3];
        Vector g = residual(v);
        for (int iter = 0; iter < 200 && g.norm() > 0.0; ++iter) {
            const Vector step = jacobian(v).fullPivLu().solve(g);
            if (!step.allFinite()) break;
            double t = 1.0;
            Vector trial = v - step;
            Vector gt = residual(trial);
            while (gt.norm() >= g.norm() && t > 1e-8) {
                t *= 0.5;
                trial = v - t * step;
                gt = residual(trial);
            }
            if (gt.norm() >= g.norm()) break;
            v = trial;
            g = gt;
        }
        const double vnorm = v.norm();
        if (vnorm > 1e-6 && g.norm() <= 1e-10 * scale * std::max(1.0, vnorm * vnorm * vnorm)) {
            const bool seen = std::any_of(out.nonzero_roots.begin(), out.nonzero_roots.end(), [&](const Vector& r) {
                return (r - v).norm() <= 1e-6 * std::max(1.0, vnorm);
            });
            if (!seen) out.nonzero_roots.push_back(v);
        }
    }
    return out;
}

}  // namespace cubic_obs
