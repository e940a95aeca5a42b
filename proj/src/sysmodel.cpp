#include "cubic_observer/sysmodel.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>

namespace cubic_obs {

Matrix observability_matrix(const Matrix& a, const Matrix& c) {
    require_square(a, "observability_matrix(a)");
    if (c.cols() != a.rows()) throw DimensionError("observability_matrix: C must have n columns");
    const Eigen::Index n = a.rows();
    const Eigen::Index ny = c.rows();
    Matrix obs(n * ny, n);
    Matrix block = c;
    for (Eigen::Index k = 0; k < n; ++k) {
        obs.middleRows(k * ny, ny) = block;
        block = block * a;
    }
    return obs;
}

LinearSystem::LinearSystem(Matrix a, Matrix b, Matrix c) : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)) {
    require_square(a_, "LinearSystem(A)");
    const Eigen::Index n = a_.rows();
    if (n == 0) throw DimensionError("LinearSystem: empty state matrix");
    if (b_.rows() != n) throw DimensionError("LinearSystem: B must have as many rows as A");
    if (c_.cols() != n) throw DimensionError("LinearSystem: C must have as many columns as A");
    if (c_.rows() == 0) throw DimensionError("LinearSystem: C has no outputs");
    require_finite(a_, "LinearSystem(A)");
    require_finite(b_, "LinearSystem(B)");
    require_finite(c_, "LinearSystem(C)");

    const Eigen::Index rank = numeric_rank(observability_matrix(a_, c_), kObservabilityRankTol);
    if (rank != n) {
        std::ostringstream os;
        os << "LinearSystem: pair (A, C) is not observable (observability rank " << rank << " < " << n << ")";
        throw ContractError(os.str());
    }
}

PerturbedFamily::PerturbedFamily(const LinearSystem& nominal, double eps_min, double eps_max)
    : nominal_(nominal), eps_min_(eps_min), eps_max_(eps_max) {
    if (!std::isfinite(eps_min) || !std::isfinite(eps_max) || eps_min > eps_max)
        throw ContractError("PerturbedFamily: need finite eps_min <= eps_max");
    if (eps_min > 0.0) {
        shift_ = eps_min;
    } else if (eps_max < 0.0) {
        shift_ = eps_max;
    }
    if (shift_ != 0.0) {
        const Eigen::Index n = nominal.states();
        nominal_ = nominal.with_state_matrix(nominal.a() + shift_ * Matrix::Identity(n, n));
        eps_min_ -= shift_;
        eps_max_ -= shift_;
    }
}

LinearSystem perturb(const PerturbedFamily& family, double eps) {
    if (!family.contains(eps)) {
        std::clog << "warning: eps = " << eps << " lies outside the family range [" << family.eps_min() << ", "
                  << family.eps_max() << "]\n";
    }
    if (eps == 0.0) return family.nominal();
    const LinearSystem& nom = family.nominal();
    Matrix a = nom.a();
    a.diagonal().array() += eps;
    return nom.with_state_matrix(std::move(a));
}

InputSignal InputSignal::zero(Eigen::Index dimension) {
    if (dimension < 0) throw DimensionError("InputSignal: negative dimension");
    return {Zero{}, dimension};
}

InputSignal InputSignal::sinusoid(double amplitude, double angular_frequency, double phase, Eigen::Index dimension) {
    if (!std::isfinite(amplitude) || !std::isfinite(angular_frequency) || !std::isfinite(phase))
        throw ContractError("InputSignal::sinusoid: parameters must be finite");
    if (dimension < 0) throw DimensionError("InputSignal: negative dimension");
    return {Sinusoid{amplitude, angular_frequency, phase}, dimension};
}

InputSignal InputSignal::constant(Vector level) {
    require_finite(level, "InputSignal::constant");
    const Eigen::Index dim = level.size();
    return {Constant{std::move(level)}, dim};
}

InputSignal InputSignal::sampled(std::vector<double> times, std::vector<Vector> values) {
    if (times.empty() || times.size() != values.size())
        throw ContractError("InputSignal::sampled: need matching, nonempty time and value lists");
    if (!std::is_sorted(times.begin(), times.end()) ||
        std::adjacent_find(times.begin(), times.end()) != times.end())
        throw ContractError("InputSignal::sampled: sample times must be strictly increasing");
    const Eigen::Index dim = values.front().size();
    for (const auto& v : values) {
        if (v.size() != dim) throw DimensionError("InputSignal::sampled: inconsistent value dimensions");
        require_finite(v, "InputSignal::sampled");
    }
    return {Sampled{std::move(times), std::move(values)}, dim};
}

Vector InputSignal::evaluate(double t) const {
    struct Visitor {
        double t;
        Eigen::Index dim;
        Vector operator()(const Zero&) const { return Vector::Zero(dim); }
        Vector operator()(const Sinusoid& s) const {
            return Vector::Constant(dim, s.amplitude * std::sin(s.angular_frequency * t + s.phase));
        }
        Vector operator()(const Constant& c) const { return c.level; }
        Vector operator()(const Sampled& s) const {
            // Last sample at or before t; before the first sample, the first value.
            const auto it = std::upper_bound(s.times.begin(), s.times.end(), t);
            if (it == s.times.begin()) return s.values.front();
            return s.values[static_cast<std::size_t>(std::distance(s.times.begin(), it)) - 1];
        }
    };
    return std::visit(Visitor{t, dimension_}, kind_);
}

}  // namespace cubic_obs
