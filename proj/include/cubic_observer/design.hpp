#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cubic_observer/numlin.hpp"
#include "cubic_observer/sysmodel.hpp"

namespace cubic_obs {

/// Linear Luenberger observer  xhat' = (A - L C) xhat + B u + L y.
struct LinearObserverDesign {
    Matrix gain_l;  // n x n_y
};

/// Cubic observer
///   xhat' = (A - Lc C) xhat + Lc y + B u - (r^T Theta r) Nc r,   r = y - C xhat,
/// together with the Lyapunov pair (P, Q) solving (A - Lc C)^T P + P (A - Lc C) = -Q.
struct CubicObserverDesign {
    enum class Origin {
        Synthesized,  ///< Nc = -gamma P^{-1} C^T Theta
        Degenerate,   ///< gamma = 0, Nc = 0 (reduces to the linear observer)
        Explicit,     ///< Nc supplied by the user
    };

    Matrix gain_lc;
    Matrix gain_nc;
    Matrix theta;
    double gamma = 0.0;
    Matrix lyapunov_p;
    Matrix lyapunov_q;
    Origin origin = Origin::Explicit;
    /// Accept a merely semidefinite damping term for explicit gains.
    bool allow_semidefinite_damping = false;

    [[nodiscard]] LinearObserverDesign linear_part() const { return {gain_lc}; }
};

/// Machine-checked stability record; every flag is backed by a numeric margin.
///
/// Margin convention: `<name>` entries are scale-relative definiteness margins
/// lambda_min(.) / max(1, ||.||_inf) of the matrix whose positivity the flag asserts.
struct Certificate {
    bool hurwitz_ok = false;
    bool damping_ok = false;
    /// True when the damping term was held to strict negative definiteness.
    bool damping_strict_test = false;
    /// True when the damping term is strictly negative definite (whatever the test).
    bool damping_strict_holds = false;
    bool uniqueness_ok = false;
    std::map<std::string, double> margins;
    std::optional<double> robustness_eps_max;
    std::optional<bool> feedback_ok;
    std::optional<double> feedback_beta;
    std::optional<bool> corollary_ok;
    std::vector<std::string> notes;

    [[nodiscard]] bool stability_ok() const noexcept { return hurwitz_ok && damping_ok && uniqueness_ok; }
    [[nodiscard]] bool all_ok() const noexcept { return stability_ok() && feedback_ok.value_or(true); }
};

/// Observer gain for a single-output system placing eig(A - L C) at `desired`
/// (dual Ackermann formula). `desired` must be closed under conjugation.
[[nodiscard]] LinearObserverDesign place_poles_single_output(const LinearSystem& sys,
                                                             std::span<const std::complex<double>> desired);

/// Cubic gain Nc = -gamma P^{-1} C^T Theta with P = solve_lyapunov(A - Lc C, q).
[[nodiscard]] CubicObserverDesign synthesize_cubic_gain(const LinearSystem& sys, const Matrix& gain_lc,
                                                        const Matrix& q, const Matrix& theta, double gamma);

/// gamma = 0, Nc = 0: the linear observer expressed as a cubic design.
[[nodiscard]] CubicObserverDesign degenerate_linear(const LinearSystem& sys, const Matrix& gain_lc,
                                                    const Matrix& q, const Matrix& theta);

/// User-supplied Nc. P is still solved from q so certificates can be issued.
/// `gamma` is informational only.
[[nodiscard]] CubicObserverDesign explicit_cubic_design(const LinearSystem& sys, const Matrix& gain_lc,
                                                        const Matrix& gain_nc, const Matrix& theta,
                                                        const Matrix& q, double gamma = 0.0,
                                                        bool allow_semidefinite_damping = false);

/// Checks the Hurwitz (Lyapunov), damping and unique-equilibrium conditions.
[[nodiscard]] Certificate certify_stability(const LinearSystem& sys, const CubicObserverDesign& design);

/// lambda_min(Q) / (2 lambda_max(P)): admissible eps_max for A + eps I.
[[nodiscard]] double robustness_bound(const CubicObserverDesign& design);

/// Scaling grid {1, 10, ..., 1e8} tried for the observer block of the feedback LMI.
[[nodiscard]] std::vector<double> feedback_beta_grid();

/// Observer-based feedback u = -K xhat. Attempts to certify
///   [[(A-BK)^T P1 + P1 (A-BK), P1 B K], [K^T B^T P1, beta ((A-LcC)^T P + P (A-LcC))]] < 0
/// with P1 from Q1 = I and beta on feedback_beta_grid(). A false flag means "not
/// certified by this method", not "unstable". Stability flags are filled in too.
[[nodiscard]] Certificate feedback_certificate(const LinearSystem& sys, const CubicObserverDesign& design,
                                               const Matrix& k);

/// The block matrix of the feedback condition for one beta.
[[nodiscard]] Matrix feedback_block_matrix(const LinearSystem& sys, const CubicObserverDesign& design,
                                           const Matrix& k, const Matrix& p1, double beta);

/// Nonzero equilibria of the error dynamics found by damped Newton from random seeds.
/// A falsifier for the uniqueness condition, not a prover.
struct EquilibriumSearchResult {
    std::vector<Vector> nonzero_roots;
    int seeds_tried = 0;
};

[[nodiscard]] EquilibriumSearchResult search_nonzero_equilibria(const LinearSystem& sys,
                                                                const CubicObserverDesign& design,
                                                                std::uint64_t seed = 0x5eed, int seeds = 100);

}  // namespace cubic_obs
