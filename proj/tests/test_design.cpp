#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "cubic_observer/design.hpp"
#include "cubic_observer/errors.hpp"
#include "oracles.hpp"

using namespace cubic_obs;
using cd = std::complex<double>;

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

LinearSystem ex1_system() { return {mat({{0, 1}, {0, 0}}), mat({{0}, {1}}), mat({{1, 0}})}; }
LinearSystem ex2_system() {
    return {mat({{-0.1, -0.2, 0}, {0.3, 0, 0}, {0.1, 0.2, -3}}), Matrix::Zero(3, 1), mat({{1, 1, 2}})};
}
LinearSystem ex3_system() {
    return {mat({{0.1, -2, 0}, {0.3, 0, -1}, {0.1, 0.2, 3}}), mat({{1, 2}, {2, 0}, {0, 1}}), mat({{1, 1, 2}})};
}

CubicObserverDesign ex1_design(double gamma = 2.0) {
    const LinearSystem sys = ex1_system();
    return synthesize_cubic_gain(sys, mat({{7}, {10}}), 10.0 * Matrix::Identity(2, 2), mat({{10}}), gamma);
}

bool same_spectrum(const std::vector<cd>& got, const std::vector<cd>& want, double tol) {
    for (const auto& w : want) {
        double best = 1e300;
        for (const auto& g : got) best = std::min(best, std::abs(g - w));
        if (best > tol * std::max(1.0, std::abs(w))) return false;
    }
    return got.size() == want.size();
}

bool same_spectrum(const Matrix& m, const std::vector<cd>& want, double tol) {
    const auto got = eigenvalues(m).values;
    return same_spectrum(std::vector<cd>(got.begin(), got.end()), want, tol);
}

}  // namespace

TEST_SUITE("pole placement") {
    TEST_CASE("double integrator, poles -2 and -5") {
        const std::vector<cd> poles = {-2.0, -5.0};
        const Matrix l = place_poles_single_output(ex1_system(), poles).gain_l;
        CHECK(std::abs(l(0, 0) - 7.0) < 1e-9);
        CHECK(std::abs(l(1, 0) - 10.0) < 1e-9);
    }

    TEST_CASE("double integrator, repeated pole -1") {
        const std::vector<cd> poles = {-1.0, -1.0};
        const Matrix l = place_poles_single_output(ex1_system(), poles).gain_l;
        CHECK(l(0, 0) == doctest::Approx(2.0));
        CHECK(l(1, 0) == doctest::Approx(1.0));
    }

    TEST_CASE("third-order example places its requested poles") {
        const LinearSystem sys = ex2_system();
        const std::vector<cd> poles = {-30.0, -10.0, -5.0};
        const Matrix l = place_poles_single_output(sys, poles).gain_l;
        CHECK(same_spectrum(sys.a() - l * sys.c(), poles, 1e-8));
    }

    TEST_CASE("the reference third-order gain corresponds to poles -30, -5, -5") {
        const LinearSystem sys = ex2_system();
        const Matrix reference = mat({{583.7712}, {-519.9601}, {-13.4556}});
        const auto coeffs = oracle::characteristic_polynomial(Matrix(sys.a() - reference * sys.c()));
        // (s + 30)(s + 5)^2 = s^3 + 40 s^2 + 325 s + 750
        CHECK(coeffs[1] == doctest::Approx(40.0).epsilon(1e-4));
        CHECK(coeffs[2] == doctest::Approx(325.0).epsilon(1e-4));
        CHECK(coeffs[3] == doctest::Approx(750.0).epsilon(1e-4));
        const std::vector<cd> poles = {-30.0, -5.0, -5.0};
        const Matrix l = place_poles_single_output(sys, poles).gain_l;
        CHECK((l - reference).cwiseAbs().maxCoeff() < 1e-3);
    }

    TEST_CASE("complex conjugate pair") {
        const LinearSystem sys = ex3_system();
        const std::vector<cd> poles = {cd(-1, 2), cd(-1, -2), -3.0};
        const Matrix l = place_poles_single_output(sys, poles).gain_l;
        CHECK(same_spectrum(sys.a() - l * sys.c(), poles, 1e-8));
    }

    TEST_CASE("round trip on random observable systems") {
        std::mt19937_64 rng(23);
        for (int trial = 0; trial < 100; ++trial) {
            const Eigen::Index n = 2 + trial % 4;
            const LinearSystem sys = oracle::random_observable_system(rng, n);
            const auto poles = oracle::random_stable_poles(rng, n);
            const Matrix l = place_poles_single_output(sys, poles).gain_l;
            CHECK(same_spectrum(oracle::closed_loop_spectrum(sys.a(), l, sys.c()), poles, 1e-8));
        }
    }

    TEST_CASE("contract violations") {
        const std::vector<cd> not_closed = {cd(-1, 1), -2.0};
        CHECK_THROWS_AS((void)place_poles_single_output(ex1_system(), not_closed), ContractError);
        const std::vector<cd> wrong_count = {-1.0};
        CHECK_THROWS((void)place_poles_single_output(ex1_system(), wrong_count));
        const LinearSystem two_out(mat({{0, 1}, {0, 0}}), mat({{0}, {1}}), Matrix::Identity(2, 2));
        const std::vector<cd> poles = {-1.0, -2.0};
        CHECK_THROWS((void)place_poles_single_output(two_out, poles));
    }
}

TEST_SUITE("cubic gain synthesis") {
    TEST_CASE("double integrator example") {
        const CubicObserverDesign d = ex1_design();
        CHECK(std::abs(d.gain_nc(0, 0) + 9.8824) < 5e-4);
        CHECK(std::abs(d.gain_nc(1, 0) + 11.5294) < 5e-4);
        CHECK(std::abs(d.lyapunov_p(0, 0) - 7.8571) < 5e-4);
        CHECK(d.origin == CubicObserverDesign::Origin::Synthesized);
    }

    TEST_CASE("third-order example with theta = 1") {
        const LinearSystem sys = ex2_system();
        const std::vector<cd> poles = {-30.0, -10.0, -5.0};
        const Matrix l = place_poles_single_output(sys, poles).gain_l;
        const auto d = synthesize_cubic_gain(sys, l, 10.0 * Matrix::Identity(3, 3), mat({{1}}), 1.0);
        CHECK(std::abs(-d.gain_nc(0, 0) - 0.1866) < 1e-3);
        CHECK(std::abs(-d.gain_nc(1, 0) + 0.1748) < 1e-3);
        CHECK(std::abs(-d.gain_nc(2, 0) + 0.0014) < 1e-3);
        const Matrix reference_p = mat({{750.5346, 785.9444, 1162.5966},
                                      {785.9444, 823.3524, 1210.2306},
                                      {1162.5966, 1210.2306, 2379.6621}});
        CHECK((d.lyapunov_p - reference_p).cwiseAbs().maxCoeff() < 1e-2);
        CHECK(std::abs(symmetric_eigenvalues(d.lyapunov_p).maxCoeff() - 3702.5756) < 1e-1);
    }

    TEST_CASE("scalar plant reduces to e' = -e - e^3") {
        const LinearSystem sys(mat({{-1}}), mat({{0}}), mat({{1}}));
        const auto d = synthesize_cubic_gain(sys, mat({{0}}), mat({{2}}), mat({{1}}), 1.0);
        CHECK(d.lyapunov_p(0, 0) == doctest::Approx(1.0));
        CHECK(d.gain_nc(0, 0) == doctest::Approx(-1.0));
    }

    TEST_CASE("precondition failures") {
        const LinearSystem sys = ex1_system();
        CHECK_THROWS_AS((void)synthesize_cubic_gain(sys, mat({{7}, {10}}), 10.0 * Matrix::Identity(2, 2), mat({{10}}), 0.0),
                        ContractError);
        CHECK_THROWS_AS((void)synthesize_cubic_gain(sys, mat({{7}, {10}}), 10.0 * Matrix::Identity(2, 2), mat({{10}}), -1.0),
                        ContractError);
        CHECK_THROWS_AS((void)synthesize_cubic_gain(sys, mat({{-7}, {10}}), 10.0 * Matrix::Identity(2, 2), mat({{10}}), 1.0),
                        DesignError);
    }

    TEST_CASE("identity, gamma linearity and certificates on random systems") {
        std::mt19937_64 rng(29);
        for (int trial = 0; trial < 100; ++trial) {
            const Eigen::Index n = 2 + trial % 4;
            const LinearSystem sys = oracle::random_observable_system(rng, n);
            const Matrix l = place_poles_single_output(sys, oracle::random_stable_poles(rng, n)).gain_l;
            const double gamma = 0.1 + static_cast<double>(trial % 7);
            const Matrix theta = Matrix::Constant(1, 1, 0.5 + static_cast<double>(trial % 3));
            const Matrix q = Matrix::Identity(n, n) * (1.0 + static_cast<double>(trial % 5));
            const auto d = synthesize_cubic_gain(sys, l, q, theta, gamma);
            const Matrix ctc = sys.c().transpose() * theta * sys.c();
            const Matrix lhs = d.lyapunov_p * d.gain_nc * sys.c() + sys.c().transpose() * d.gain_nc.transpose() * d.lyapunov_p;
            CHECK(inf_norm(Matrix(lhs + 2.0 * gamma * ctc)) <= 1e-10 * (1.0 + 2.0 * gamma * inf_norm(ctc)));

            const auto d2 = synthesize_cubic_gain(sys, l, q, theta, 2.0 * gamma);
            CHECK(inf_norm(Matrix(d2.gain_nc - 2.0 * d.gain_nc)) <= 1e-12 * inf_norm(d2.gain_nc));

            const Certificate cert = certify_stability(sys, d);
            CHECK(cert.hurwitz_ok);
            CHECK(cert.uniqueness_ok);
            CHECK(cert.damping_ok);
        }
    }
}

TEST_SUITE("certificates") {
    TEST_CASE("double integrator design passes every condition") {
        const Certificate c = certify_stability(ex1_system(), ex1_design());
        CHECK(c.hurwitz_ok);
        CHECK(c.damping_ok);
        CHECK(c.uniqueness_ok);
        CHECK_FALSE(c.damping_strict_test);
        CHECK(c.margins.count("hurwitz_abscissa") == 1);
        CHECK(c.margins.count("q_min_eigenvalue") == 1);
        CHECK(c.margins.at("q_min_eigenvalue") == doctest::Approx(10.0));
    }

    TEST_CASE("degenerate design: damping is semidefinite with zero margin") {
        const auto d = degenerate_linear(ex1_system(), mat({{7}, {10}}), 10.0 * Matrix::Identity(2, 2), mat({{10}}));
        CHECK(d.gain_nc.isZero(0.0));
        CHECK(d.gamma == 0.0);
        const Certificate c = certify_stability(ex1_system(), d);
        CHECK(c.hurwitz_ok);
        CHECK(c.damping_ok);
        CHECK_FALSE(c.damping_strict_holds);
        CHECK(std::abs(c.margins.at("damping")) < 1e-14);
    }

    TEST_CASE("sign-flipped cubic gain fails damping and uniqueness") {
        const LinearSystem sys = ex1_system();
        const auto good = ex1_design();
        const auto bad = explicit_cubic_design(sys, good.gain_lc, Matrix(-good.gain_nc), good.theta, good.lyapunov_q,
                                               good.gamma, true);
        const Certificate c = certify_stability(sys, bad);
        CHECK(c.hurwitz_ok);
        CHECK_FALSE(c.damping_ok);
        CHECK_FALSE(c.uniqueness_ok);
    }

    TEST_CASE("explicit gains are held to the strict damping test unless opted out") {
        const LinearSystem sys = ex1_system();
        const auto good = ex1_design();
        const auto strict = explicit_cubic_design(sys, good.gain_lc, good.gain_nc, good.theta, good.lyapunov_q);
        const Certificate cs = certify_stability(sys, strict);
        CHECK(cs.damping_strict_test);
        CHECK_FALSE(cs.damping_ok);
        const auto relaxed =
            explicit_cubic_design(sys, good.gain_lc, good.gain_nc, good.theta, good.lyapunov_q, 0.0, true);
        CHECK(certify_stability(sys, relaxed).damping_ok);
    }

    TEST_CASE("full-rank output weighting uses the strict test") {
        const LinearSystem sys(mat({{0, 1}, {-1, -1}}), mat({{0}, {1}}), Matrix::Identity(2, 2));
        const auto d = synthesize_cubic_gain(sys, Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                                             Matrix::Identity(2, 2), 1.0);
        const Certificate c = certify_stability(sys, d);
        CHECK(c.damping_strict_test);
        CHECK(c.damping_strict_holds);
        CHECK(c.damping_ok);
    }

    TEST_CASE("equilibrium search finds no spurious roots for a certified design") {
        const auto res = search_nonzero_equilibria(ex1_system(), ex1_design());
        CHECK(res.seeds_tried == 100);
        CHECK(res.nonzero_roots.empty());
    }
}

TEST_SUITE("robustness bound") {
    TEST_CASE("trivial case") {
        CubicObserverDesign d;
        d.lyapunov_p = Matrix::Identity(2, 2);
        d.lyapunov_q = 2.0 * Matrix::Identity(2, 2);
        CHECK(robustness_bound(d) == doctest::Approx(1.0));
    }

    TEST_CASE("double integrator, 2x2 closed form") {
        const auto d = ex1_design();
        const double tr = d.lyapunov_p.trace();
        const double det = d.lyapunov_p.determinant();
        const double lmax = (tr + std::sqrt(tr * tr - 4.0 * det)) / 2.0;
        CHECK(robustness_bound(d) == doctest::Approx(10.0 / (2.0 * lmax)).epsilon(1e-12));
    }

    TEST_CASE("third-order example") {
        const LinearSystem sys = ex2_system();
        const std::vector<cd> poles = {-30.0, -10.0, -5.0};
        const Matrix l = place_poles_single_output(sys, poles).gain_l;
        const auto d = synthesize_cubic_gain(sys, l, 10.0 * Matrix::Identity(3, 3), mat({{1}}), 0.1);
        CHECK(std::abs(robustness_bound(d) - 0.00135) < 1e-4);
    }

    TEST_CASE("invariant under Q -> cQ") {
        const LinearSystem sys = ex1_system();
        const Matrix l = mat({{7}, {10}});
        const auto a = synthesize_cubic_gain(sys, l, Matrix::Identity(2, 2), mat({{1}}), 1.0);
        const auto b = synthesize_cubic_gain(sys, l, 4.0 * Matrix::Identity(2, 2), mat({{1}}), 1.0);
        CHECK(robustness_bound(a) == robustness_bound(b));
    }
}

TEST_SUITE("feedback certificate") {
    TEST_CASE("observer-based feedback example certifies at some beta") {
        const LinearSystem sys = ex3_system();
        const Matrix l = mat({{0.267}, {-1.429}, {3.904}});
        const auto d = explicit_cubic_design(sys, l, Matrix(-10.0 * l), mat({{10}}), Matrix::Identity(3, 3));
        const Matrix k = mat({{-0.597, 2.004, 2.511}, {-0.197, 0.757, 7.510}});
        const Certificate c = feedback_certificate(sys, d, k);
        REQUIRE(c.feedback_ok.has_value());
        CHECK(*c.feedback_ok);
        REQUIRE(c.feedback_beta.has_value());
        CHECK(*c.feedback_beta >= 1.0);
        CHECK(c.corollary_ok.value_or(false));
    }

    TEST_CASE("decoupled case certifies at beta = 1") {
        const LinearSystem sys(mat({{-1, 0}, {0, -2}}), Matrix::Zero(2, 1), mat({{1, 1}}));
        const std::vector<cd> poles = {-3.0, -4.0};
        const Matrix l = place_poles_single_output(sys, poles).gain_l;
        const auto d = synthesize_cubic_gain(sys, l, Matrix::Identity(2, 2), mat({{1}}), 1.0);
        const Certificate c = feedback_certificate(sys, d, Matrix::Zero(1, 2));
        CHECK(c.feedback_ok.value_or(false));
        CHECK(c.feedback_beta.value_or(0.0) == 1.0);
    }

    TEST_CASE("destabilizing state feedback is rejected") {
        const LinearSystem sys = ex3_system();
        const Matrix l = mat({{0.267}, {-1.429}, {3.904}});
        const auto d = explicit_cubic_design(sys, l, Matrix(-10.0 * l), mat({{10}}), Matrix::Identity(3, 3));
        const Certificate c = feedback_certificate(sys, d, Matrix::Zero(2, 3));
        CHECK_FALSE(c.feedback_ok.value_or(true));
        CHECK_FALSE(c.all_ok());
    }

    TEST_CASE("beta grid") {
        const auto g = feedback_beta_grid();
        REQUIRE(g.size() == 9);
        CHECK(g.front() == 1.0);
        CHECK(g.back() == 1e8);
    }
}
