#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <numbers>

#include "cubic_observer/errors.hpp"
#include "cubic_observer/sysmodel.hpp"

using namespace cubic_obs;

namespace {

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& r : rows) {
        Eigen::Index j = 0;
        for (double v : r) m(i, j++) = v;
        ++i;
    }
    return m;
}

const Matrix kEx2A = mat({{-0.1, -0.2, 0}, {0.3, 0, 0}, {0.1, 0.2, -3}});
const Matrix kEx2C = mat({{1, 1, 2}});

}  // namespace

TEST_SUITE("observability") {
    TEST_CASE("double integrator with position output") {
        const Matrix o = observability_matrix(mat({{0, 1}, {0, 0}}), mat({{1, 0}}));
        CHECK(o == Matrix::Identity(2, 2));
        CHECK(numeric_rank(o) == 2);
    }

    TEST_CASE("full-state output is always observable") {
        const Matrix a = mat({{1, 2, 3}, {4, 5, 6}, {7, 8, 9}});
        CHECK(numeric_rank(observability_matrix(a, Matrix::Identity(3, 3))) == 3);
    }

    TEST_CASE("unobservable pair is rejected on construction") {
        const Matrix a = Matrix::Identity(2, 2);
        const Matrix c = mat({{1, 0}});
        CHECK(observability_matrix(a, c) == mat({{1, 0}, {1, 0}}));
        CHECK_THROWS_AS(LinearSystem(a, Matrix::Zero(2, 1), c), ContractError);
    }

    TEST_CASE("shape mismatches are dimension errors") {
        CHECK_THROWS_AS(LinearSystem(Matrix::Zero(2, 3), Matrix::Zero(2, 1), Matrix::Zero(1, 3)), DimensionError);
        CHECK_THROWS_AS(LinearSystem(Matrix::Zero(2, 2), Matrix::Zero(3, 1), mat({{1, 0}})), DimensionError);
        CHECK_THROWS_AS(LinearSystem(Matrix::Zero(2, 2), Matrix::Zero(2, 1), mat({{1, 0, 0}})), DimensionError);
    }

    TEST_CASE("non-finite entries are rejected") {
        Matrix a = mat({{0, 1}, {0, 0}});
        a(1, 1) = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS(LinearSystem(a, Matrix::Zero(2, 1), mat({{1, 0}})));
    }
}

TEST_SUITE("perturb") {
    const LinearSystem ex2(kEx2A, Matrix::Zero(3, 1), kEx2C);

    TEST_CASE("eps = 0 is the nominal system exactly") {
        const PerturbedFamily fam(ex2, -0.1, 0.06);
        const LinearSystem s = perturb(fam, 0.0);
        CHECK(s.a() == ex2.a());
        CHECK(s.b() == ex2.b());
        CHECK(s.c() == ex2.c());
    }

    TEST_CASE("diagonal shift by eps, off-diagonal untouched") {
        const PerturbedFamily fam(ex2, 0.0, 0.06);
        const LinearSystem s = perturb(fam, 0.02);
        CHECK(s.a() == Matrix(kEx2A + 0.02 * Matrix::Identity(3, 3)));
        const Matrix diff = s.a() - ex2.a();
        for (Eigen::Index i = 0; i < 3; ++i)
            for (Eigen::Index j = 0; j < 3; ++j) CHECK(diff(i, j) == (i == j ? (kEx2A(i, i) + 0.02) - kEx2A(i, i) : 0.0));
    }

    TEST_CASE("scalar zero plant") {
        const LinearSystem z(Matrix::Zero(1, 1), Matrix::Zero(1, 1), Matrix::Ones(1, 1));
        const PerturbedFamily fam(z, -1.0, 1.0);
        CHECK(perturb(fam, -0.5).a()(0, 0) == -0.5);
    }

    TEST_CASE("same-signed ranges are normalized by shifting the nominal matrix") {
        const PerturbedFamily fam(ex2, 0.01, 0.05);
        CHECK(fam.eps_min() == 0.0);
        CHECK(fam.eps_max() == doctest::Approx(0.04));
        CHECK(fam.shift() == doctest::Approx(0.01));
        CHECK(fam.nominal().a()(0, 0) == doctest::Approx(-0.09));
        const PerturbedFamily neg(ex2, -0.05, -0.01);
        CHECK(neg.eps_max() == 0.0);
        CHECK(neg.eps_min() == doctest::Approx(-0.04));
    }

    TEST_CASE("out-of-range eps is allowed") {
        const PerturbedFamily fam(ex2, 0.0, 0.001);
        CHECK_FALSE(fam.contains(0.02));
        CHECK(perturb(fam, 0.02).a()(2, 2) == doctest::Approx(-2.98));
    }
}

TEST_SUITE("input signals") {
    TEST_CASE("zero") {
        const auto z = InputSignal::zero(2);
        CHECK(z.evaluate(3.7) == Vector::Zero(2));
        CHECK(z.dimension() == 2);
    }

    TEST_CASE("sinusoid") {
        const auto s = InputSignal::sinusoid(1.0, 1.0, 0.0);
        CHECK(s.evaluate(std::numbers::pi / 2)(0) == doctest::Approx(1.0));
        const auto s2 = InputSignal::sinusoid(2.0, 3.0, 0.5, 2);
        CHECK(s2.evaluate(0.1)(1) == doctest::Approx(2.0 * std::sin(0.3 + 0.5)));
    }

    TEST_CASE("constant") {
        Vector level(2);
        level << 1.5, -2.0;
        CHECK(InputSignal::constant(level).evaluate(99.0) == level);
    }

    TEST_CASE("sampled uses zero-order hold and the first value before the first sample") {
        const std::vector<Vector> values = {Vector::Constant(1, 1.0), Vector::Constant(1, 3.0)};
        const auto s = InputSignal::sampled({0.0, 2.0}, values);
        CHECK(s.evaluate(1.5)(0) == 1.0);
        CHECK(s.evaluate(2.0)(0) == 3.0);
        CHECK(s.evaluate(10.0)(0) == 3.0);
        const auto late = InputSignal::sampled({1.0, 2.0}, values);
        CHECK(late.evaluate(0.5)(0) == 1.0);
    }
}
