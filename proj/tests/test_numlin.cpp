#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "cubic_observer/errors.hpp"
#include "cubic_observer/numlin.hpp"
#include "oracles.hpp"

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

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
    return m;
}

const Matrix kEx1Closed = mat({{-7, 1}, {-10, 0}});
const Matrix kEx1P = mat({{7.8571, -5}, {-5, 4.2857}});

}  // namespace

TEST_SUITE("eigenvalues") {
    TEST_CASE("identity has a triple unit eigenvalue") {
        const auto s = eigenvalues(Matrix::Identity(3, 3));
        REQUIRE(s.size() == 3);
        for (const auto& v : s.values) CHECK(std::abs(v - 1.0) < 1e-12);
    }

    TEST_CASE("closed-loop matrix of the double integrator example") {
        const auto s = eigenvalues(kEx1Closed);
        CHECK(s.values[0].real() == doctest::Approx(-5.0).epsilon(1e-12));
        CHECK(s.values[1].real() == doctest::Approx(-2.0).epsilon(1e-12));
        CHECK(std::abs(s.values[0].imag()) < 1e-12);
    }

    TEST_CASE("sorted by real part then imaginary part") {
        const auto s = eigenvalues(mat({{0, 1, 0}, {-1, 0, 0}, {0, 0, -3}}));
        CHECK(s.values[0].real() == doctest::Approx(-3.0));
        CHECK(s.values[1].imag() == doctest::Approx(-1.0));
        CHECK(s.values[2].imag() == doctest::Approx(1.0));
        CHECK(s.max_real() == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(s.min_real() == doctest::Approx(-3.0));
    }

    TEST_CASE("random 4x4 agrees with the characteristic-polynomial root oracle") {
        std::mt19937_64 rng(42);
        for (int trial = 0; trial < 20; ++trial) {
            const Matrix m = random_matrix(rng, 4, 4);
            const auto got = eigenvalues(m).values;
            auto want = oracle::eigenvalues(m);
            for (const auto& w : want) {
                double best = 1e300;
                for (const auto& g : got) best = std::min(best, std::abs(g - w));
                CHECK(best < 1e-8);
            }
        }
    }

    TEST_CASE("companion matrix of known roots") {
        const std::vector<double> roots = {-4.0, -1.5, 0.5, 2.0};
        std::vector<double> coeffs = {1.0};
        for (double r : roots) {
            std::vector<double> next(coeffs.size() + 1, 0.0);
            for (std::size_t i = 0; i < coeffs.size(); ++i) {
                next[i] += coeffs[i];
                next[i + 1] -= r * coeffs[i];
            }
            coeffs = next;
        }
        Matrix comp = Matrix::Zero(4, 4);
        for (int i = 0; i < 4; ++i) comp(0, i) = -coeffs[static_cast<std::size_t>(i) + 1];
        for (int i = 1; i < 4; ++i) comp(i, i - 1) = 1.0;
        const auto s = eigenvalues(comp);
        for (int i = 0; i < 4; ++i) CHECK(s.values[static_cast<std::size_t>(i)].real() == doctest::Approx(roots[static_cast<std::size_t>(i)]).epsilon(1e-10));
    }

    TEST_CASE("similarity invariance") {
        std::mt19937_64 rng(7);
        for (int trial = 0; trial < 20; ++trial) {
            const Matrix m = random_matrix(rng, 4, 4);
            Matrix t = random_matrix(rng, 4, 4) + 3.0 * Matrix::Identity(4, 4);
            const auto a = eigenvalues(m).values;
            const auto b = eigenvalues(Matrix(t.inverse() * m * t)).values;
            for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-6);
        }
    }

    TEST_CASE("non-square input is a dimension error") {
        CHECK_THROWS_AS((void)eigenvalues(Matrix::Zero(2, 3)), DimensionError);
    }
}

TEST_SUITE("hurwitz") {
    TEST_CASE("examples") {
        CHECK(is_hurwitz(Matrix(-Matrix::Identity(2, 2))));
        CHECK_FALSE(is_hurwitz(mat({{0.1, -2, 0}, {0.3, 0, -1}, {0.1, 0.2, 3}})));
        const Matrix a = mat({{-0.1, -0.2, 0}, {0.3, 0, 0}, {0.1, 0.2, -3}});
        const Matrix l = mat({{583.7712}, {-519.9601}, {-13.4556}});
        CHECK(is_hurwitz(Matrix(a - l * mat({{1, 1, 2}}))));
    }

    TEST_CASE("margin shifts the threshold") {
        const Matrix m = Matrix(-Matrix::Identity(2, 2));
        CHECK(is_hurwitz(m, 0.5));
        CHECK_FALSE(is_hurwitz(m, 1.0));
    }
}

TEST_SUITE("definiteness") {
    TEST_CASE("examples") {
        CHECK(is_positive_definite(Matrix::Identity(2, 2)));
        CHECK(is_positive_definite(kEx1P));
        CHECK_FALSE(is_positive_definite(mat({{1, 2}, {2, 1}})));
        CHECK(is_negative_definite_quadform(Matrix(-Matrix::Identity(3, 3))));
        CHECK(is_negative_definite_quadform(Matrix(kEx1P * kEx1Closed)));
        CHECK_FALSE(is_negative_definite_quadform(mat({{0, 1}, {-1, 0}})));
    }

    TEST_CASE("asymmetric input beyond tolerance is a contract error") {
        CHECK_THROWS_AS((void)is_positive_definite(mat({{1, 0.5}, {0, 1}})), ContractError);
    }

    TEST_CASE("agrees with the leading-minors oracle on random symmetric matrices") {
        std::mt19937_64 rng(11);
        int positives = 0;
        for (int trial = 0; trial < 500; ++trial) {
            const Eigen::Index n = 2 + trial % 2;
            Matrix s = random_matrix(rng, n, n);
            s = (s + s.transpose()).eval();
            s.diagonal().array() += 0.8;
            const bool want = oracle::positive_definite_by_minors(s);
            positives += want ? 1 : 0;
            // Skip near-singular draws where the relative threshold legitimately differs.
            if (std::abs(symmetric_eigenvalues(s).minCoeff()) < 1e-6) continue;
            CHECK(is_positive_definite(s) == want);
        }
        CHECK(positives > 50);
        CHECK(positives < 450);
    }

    TEST_CASE("negative definite quadratic forms are negative on random vectors") {
        std::mt19937_64 rng(13);
        std::normal_distribution<double> g;
        int certified = 0;
        for (int trial = 0; trial < 50; ++trial) {
            const Matrix m = random_matrix(rng, 3, 3) - 1.2 * Matrix::Identity(3, 3);
            if (!is_negative_definite_quadform(m)) continue;
            ++certified;
            for (int k = 0; k < 1000; ++k) {
                Vector v(3);
                for (auto& x : v) x = g(rng);
                CHECK(v.dot(m * v) < 0.0);
            }
        }
        CHECK(certified > 5);
    }
}

TEST_SUITE("lyapunov") {
    TEST_CASE("scalar-multiple identity case") {
        const Matrix p = solve_lyapunov(Matrix(-Matrix::Identity(2, 2)), Matrix(2.0 * Matrix::Identity(2, 2)));
        CHECK((p - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);
    }

    TEST_CASE("double integrator observer") {
        const Matrix q = 10.0 * Matrix::Identity(2, 2);
        const Matrix p = solve_lyapunov(kEx1Closed, q);
        CHECK((p - kEx1P).cwiseAbs().maxCoeff() < 5e-4);
        CHECK(inf_norm(Matrix(kEx1Closed.transpose() * p + p * kEx1Closed + q)) <= 1e-8 * 10.0);
        CHECK(p == p.transpose());
    }

    TEST_CASE("residual, exact symmetry and definiteness on random stable systems") {
        std::mt19937_64 rng(17);
        for (int trial = 0; trial < 100; ++trial) {
            const Eigen::Index n = 2 + trial % 6;
            Matrix f = random_matrix(rng, n, n);
            const double shift = eigenvalues(f).max_real() + 0.1;
            f.diagonal().array() -= std::max(shift, 0.0);
            Matrix r = random_matrix(rng, n, n);
            const Matrix q = r * r.transpose() + Matrix::Identity(n, n);
            const Matrix p = solve_lyapunov(f, q);
            CHECK(inf_norm(Matrix(f.transpose() * p + p * f + q)) <= 1e-8 * inf_norm(q));
            CHECK(p == p.transpose());
            CHECK(oracle::positive_definite_by_minors(p));
        }
    }

    TEST_CASE("non-Hurwitz premise is rejected") {
        try {
            (void)solve_lyapunov(Matrix(Matrix::Identity(2, 2)), Matrix(Matrix::Identity(2, 2)));
            FAIL("expected DesignError");
        } catch (const DesignError& e) {
            CHECK(std::string(e.what()).find("Lyapunov premise violated") != std::string::npos);
        }
    }

    TEST_CASE("q must be symmetric positive definite") {
        CHECK_THROWS((void)solve_lyapunov(kEx1Closed, mat({{1, 0}, {0, -1}})));
    }
}

TEST_SUITE("invert") {
    TEST_CASE("examples") {
        CHECK(invert(Matrix(Matrix::Identity(4, 4))).isApprox(Matrix::Identity(4, 4)));
        const Matrix d = invert(mat({{2, 0}, {0, 4}}));
        CHECK(d(0, 0) == doctest::Approx(0.5));
        CHECK(d(1, 1) == doctest::Approx(0.25));
        const double det = 7.8571 * 4.2857 - 25.0;
        const Matrix want = mat({{4.2857, 5}, {5, 7.8571}}) / det;
        CHECK((invert(kEx1P) - want).cwiseAbs().maxCoeff() < 1e-4);
        CHECK(det == doctest::Approx(8.6735).epsilon(1e-4));
    }

    TEST_CASE("singular input is a numerical error") {
        CHECK_THROWS_AS((void)invert(mat({{1, 2}, {2, 4}})), NumericalError);
    }

    TEST_CASE("invert of invert is the identity map") {
        std::mt19937_64 rng(19);
        for (int trial = 0; trial < 50; ++trial) {
            const Matrix m = random_matrix(rng, 4, 4) + 3.0 * Matrix::Identity(4, 4);
            CHECK((invert(invert(m)) - m).cwiseAbs().maxCoeff() < 1e-8);
            CHECK(inf_norm(Matrix(m * invert(m) - Matrix::Identity(4, 4))) < 1e-10 * condition_number(m));
        }
    }
}

TEST_CASE("numeric rank") {
    CHECK(numeric_rank(mat({{1, 2}, {2, 4}})) == 1);
    CHECK(numeric_rank(Matrix(Matrix::Identity(3, 3))) == 3);
    CHECK(numeric_rank(Matrix(Matrix::Zero(2, 2))) == 0);
}
