#pragma once

/// Small dense real-matrix numerics: spectra, definiteness tests, inversion and
/// the continuous Lyapunov equation. Sized for n <= ~20; everything is dense.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "cubic_observer/errors.hpp"

namespace cubic_obs {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;

/// Default relative threshold for definiteness tests.
inline constexpr double kDefiniteTol = 1e-10;
/// Relative asymmetry accepted before a matrix stops counting as symmetric.
inline constexpr double kSymmetryTol = 1e-9;
/// Condition estimate beyond which invert() refuses.
inline constexpr double kMaxCondition = 1e12;

/// Eigenvalues sorted by real part ascending, ties by imaginary part.
template <typename Scalar>
struct Spectrum {
    std::vector<std::complex<Scalar>> values;

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
    [[nodiscard]] Scalar max_real() const {
        Scalar m = -std::numeric_limits<Scalar>::infinity();
        for (const auto& v : values) m = std::max(m, v.real());
        return m;
    }
    [[nodiscard]] Scalar min_real() const {
        Scalar m = std::numeric_limits<Scalar>::infinity();
        for (const auto& v : values) m = std::min(m, v.real());
        return m;
    }
};

/// Induced infinity norm (max absolute row sum).
template <typename Derived>
[[nodiscard]] typename Derived::Scalar inf_norm(const Eigen::MatrixBase<Derived>& m) {
    if (m.size() == 0) return typename Derived::Scalar(0);
    return m.cwiseAbs().rowwise().sum().maxCoeff();
}

template <typename Derived>
void require_square(const Eigen::MatrixBase<Derived>& m, const char* what) {
    if (m.rows() != m.cols()) {
        std::ostringstream os;
        os << what << ": expected a square matrix, got " << m.rows() << "x" << m.cols();
        throw DimensionError(os.str());
    }
}

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* what) {
    if (!m.allFinite()) throw ContractError(std::string(what) + ": matrix has non-finite entries");
}

/// Returns (s + s^T)/2 after checking ||s - s^T||_inf <= kSymmetryTol * ||s||_inf.
template <typename Derived>
[[nodiscard]] MatrixX<typename Derived::Scalar> symmetrized(const Eigen::MatrixBase<Derived>& s,
                                                            const char* what = "symmetric input") {
    require_square(s, what);
    using Scalar = typename Derived::Scalar;
    const MatrixX<Scalar> m = s;
    const Scalar asym = inf_norm(MatrixX<Scalar>(m - m.transpose()));
    if (asym > Scalar(kSymmetryTol) * inf_norm(m)) {
        std::ostringstream os;
        os << what << ": matrix is not symmetric (||S - S^T||_inf = " << asym << ")";
        throw ContractError(os.str());
    }
    return (m + m.transpose()) / Scalar(2);
}

template <typename Derived>
[[nodiscard]] Spectrum<typename Derived::Scalar> eigenvalues(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    require_square(m, "eigenvalues");
    require_finite(m, "eigenvalues");
    Spectrum<Scalar> out;
    if (m.rows() == 0) return out;
    Eigen::EigenSolver<MatrixX<Scalar>> solver(MatrixX<Scalar>(m), /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        std::ostringstream os;
        os << "eigenvalues: QR iteration did not converge for " << m.rows() << "x" << m.cols()
           << " matrix (||m||_inf = " << inf_norm(m) << ")";
        throw NumericalError(os.str());
    }
    const auto& ev = solver.eigenvalues();
    out.values.assign(ev.data(), ev.data() + ev.size());
    std::sort(out.values.begin(), out.values.end(), [](const auto& a, const auto& b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    return out;
}

/// Real eigenvalues of a symmetric matrix, ascending.
template <typename Derived>
[[nodiscard]] VectorX<typename Derived::Scalar> symmetric_eigenvalues(const Eigen::MatrixBase<Derived>& s) {
    using Scalar = typename Derived::Scalar;
    const MatrixX<Scalar> sym = symmetrized(s);
    if (sym.rows() == 0) return {};
    Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> solver(sym, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NumericalError("symmetric_eigenvalues: solver did not converge");
    return solver.eigenvalues();
}

template <typename Derived>
[[nodiscard]] bool is_hurwitz(const Eigen::MatrixBase<Derived>& m, typename Derived::Scalar margin = 0) {
    return eigenvalues(m).max_real() < -margin;
}

/// Scale-relative definiteness margin: lambda_min(s) / max(1, ||s||_inf).
/// Positive iff s is positive definite by more than the relative threshold 0.
template <typename Derived>
[[nodiscard]] typename Derived::Scalar positive_definite_margin(const Eigen::MatrixBase<Derived>& s) {
    using Scalar = typename Derived::Scalar;
    const auto ev = symmetric_eigenvalues(s);
    if (ev.size() == 0) return Scalar(0);
    return ev.minCoeff() / std::max(Scalar(1), inf_norm(s));
}

/// True iff lambda_min(s) > tol * max(1, ||s||_inf).
template <typename Derived>
[[nodiscard]] bool is_positive_definite(const Eigen::MatrixBase<Derived>& s,
                                        typename Derived::Scalar tol = kDefiniteTol) {
    return positive_definite_margin(s) > tol;
}

/// Lemma-style test: v^T m v < 0 for all v != 0, via m + m^T negative definite.
template <typename Derived>
[[nodiscard]] bool is_negative_definite_quadform(const Eigen::MatrixBase<Derived>& m,
                                                 typename Derived::Scalar tol = kDefiniteTol) {
    require_square(m, "is_negative_definite_quadform");
    using Scalar = typename Derived::Scalar;
    const MatrixX<Scalar> neg_sym = -(m + m.transpose());
    return is_positive_definite(neg_sym, tol);
}

/// Solves f^T p + p f = -q for symmetric positive-definite p.
///
/// Uses the n^2 x n^2 Kronecker system (I (x) f^T + f^T (x) I) vec(p) = -vec(q),
/// followed by one step of iterative refinement. f must be Hurwitz.
template <typename DerivedF, typename DerivedQ>
[[nodiscard]] MatrixX<typename DerivedF::Scalar> solve_lyapunov(const Eigen::MatrixBase<DerivedF>& f,
                                                                const Eigen::MatrixBase<DerivedQ>& q) {
    using Scalar = typename DerivedF::Scalar;
    require_square(f, "solve_lyapunov(f)");
    require_finite(f, "solve_lyapunov(f)");
    if (q.rows() != f.rows() || q.cols() != f.cols())
        throw DimensionError("solve_lyapunov: q must match the shape of f");
    const MatrixX<Scalar> qs = symmetrized(q, "solve_lyapunov(q)");
    if (!is_positive_definite(qs)) throw ContractError("solve_lyapunov: q must be positive definite");
    const auto spec = eigenvalues(f);
    if (!(spec.max_real() < 0)) {
        std::ostringstream os;
        os << "Lyapunov premise violated: f is not Hurwitz (max Re(lambda) = " << spec.max_real() << ")";
        throw DesignError(os.str());
    }

    const Eigen::Index n = f.rows();
    const MatrixX<Scalar> ft = f.transpose();
    MatrixX<Scalar> kron = MatrixX<Scalar>::Zero(n * n, n * n);
    // Column-major vec: vec(f^T p) = (I (x) f^T) vec(p), vec(p f) = (f^T (x) I) vec(p).
    for (Eigen::Index j = 0; j < n; ++j) {
        kron.block(j * n, j * n, n, n) += ft;
        for (Eigen::Index k = 0; k < n; ++k)
            kron.block(j * n, k * n, n, n).diagonal().array() += f(k, j);
    }
    const Eigen::FullPivLU<MatrixX<Scalar>> lu(kron);
    if (!lu.isInvertible()) throw NumericalError("solve_lyapunov: Kronecker system is singular");

    const VectorX<Scalar> rhs = -Eigen::Map<const VectorX<Scalar>>(qs.data(), n * n);
    VectorX<Scalar> x = lu.solve(rhs);
    x += lu.solve(VectorX<Scalar>(rhs - kron * x));
    MatrixX<Scalar> p = Eigen::Map<const MatrixX<Scalar>>(x.data(), n, n);
    // IEEE addition commutes, so this is exactly symmetric.
    return (p + p.transpose()) / Scalar(2);
}

/// Ratio sigma_max / sigma_min; infinity for singular input.
template <typename Derived>
[[nodiscard]] typename Derived::Scalar condition_number(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    require_square(m, "condition_number");
    if (m.rows() == 0) return Scalar(1);
    Eigen::JacobiSVD<MatrixX<Scalar>> svd{MatrixX<Scalar>(m)};
    const auto& sv = svd.singularValues();
    const Scalar smin = sv(sv.size() - 1);
    if (smin == Scalar(0)) return std::numeric_limits<Scalar>::infinity();
    return sv(0) / smin;
}

template <typename Derived>
[[nodiscard]] MatrixX<typename Derived::Scalar> invert(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    require_square(m, "invert");
    require_finite(m, "invert");
    const Scalar cond = condition_number(m);
    if (!(cond < Scalar(kMaxCondition))) {
        std::ostringstream os;
        os << "invert: matrix is singular or ill-conditioned (condition estimate " << cond << ")";
        throw NumericalError(os.str());
    }
    return Eigen::FullPivLU<MatrixX<Scalar>>(MatrixX<Scalar>(m)).inverse();
}

/// Numerical rank: singular values below rel_tol * sigma_max count as zero.
template <typename Derived>
[[nodiscard]] Eigen::Index numeric_rank(const Eigen::MatrixBase<Derived>& m,
                                        typename Derived::Scalar rel_tol = 1e-9) {
    using Scalar = typename Derived::Scalar;
    if (m.size() == 0) return 0;
    Eigen::JacobiSVD<MatrixX<Scalar>> svd{MatrixX<Scalar>(m)};
    const auto& sv = svd.singularValues();
    if (sv(0) == Scalar(0)) return 0;
    return (sv.array() > rel_tol * sv(0)).count();
}

}  // namespace cubic_obs
