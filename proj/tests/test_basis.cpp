#include "lagvcm/basis.hpp"
#include "lagvcm/error.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace lagvcm;

TEST_CASE("laguerre_polynomial matches low-order values") {
    CHECK(laguerre_polynomial(0, 7.3) == 1.0);
    CHECK(laguerre_polynomial(1, 1.0) == doctest::Approx(0.0));
    CHECK(laguerre_polynomial(2, 1.0) == doctest::Approx(-0.5).epsilon(1e-15));
}

TEST_CASE("recurrence agrees with explicit expansions up to degree 4") {
    auto closed = [](int k, double t) {
        switch (k) {
        case 0: return 1.0;
        case 1: return 1.0 - t;
        case 2: return 1.0 - 2.0 * t + t * t / 2.0;
        case 3: return 1.0 - 3.0 * t + 1.5 * t * t - t * t * t / 6.0;
        default: return 1.0 - 4.0 * t + 3.0 * t * t - 2.0 * t * t * t / 3.0 + t * t * t * t / 24.0;
        }
    };
    for (int k = 0; k <= 4; ++k) {
        for (double t : {0.0, 0.1, 0.37, 1.0, 2.5, 4.2, 9.9, 31.0}) {
            const double expect = closed(k, t);
            const double got = laguerre_polynomial(k, t);
            // Relative check away from roots, absolute next to them.
            CHECK(std::abs(got - expect) <= 1e-12 * std::max(1.0, std::abs(expect)));
        }
    }
}

TEST_CASE("laguerre_function values") {
    for (int k = 0; k < 30; ++k) CHECK(laguerre_function(k, 0.0) == doctest::Approx(1.0));
    CHECK(laguerre_function(1, 2.0) == doctest::Approx(-0.36787944117144233).epsilon(1e-14));
    // mpmath, 30 digits: exp(-20) L_5(40)
    const double phi5 = laguerre_function(5, 40.0);
    CHECK(phi5 == doctest::Approx(-0.000863346486165141).epsilon(1e-12));
    CHECK(std::abs(phi5) <= 1.0);
}

TEST_CASE("negative arguments are rejected") {
    CHECK_THROWS_AS(laguerre_function(2, -0.1), DomainError);
    CHECK_THROWS_AS(laguerre_polynomial(-1, 1.0), DomainError);
    CHECK_THROWS_AS(generalized_laguerre_function(1, -0.5, 1.0), DomainError);
}

TEST_CASE("generalized Laguerre functions") {
    SUBCASE("nu = 0 reduces to the standard functions") {
        for (int k = 0; k < 25; ++k) {
            for (double t : {0.05, 1.0, 7.5, 60.0}) {
                CHECK(generalized_laguerre_function(k, 0.0, t) ==
                      doctest::Approx(laguerre_function(k, t)).epsilon(1e-14));
            }
        }
    }
    SUBCASE("direct evaluation") {
        CHECK(generalized_laguerre_function(0, 2.0, 1.0) ==
              doctest::Approx(0.42888194248035340).epsilon(1e-14));
    }
    SUBCASE("continuity in nu at zero") {
        for (int k = 0; k < 20; ++k) {
            for (double t : {0.01, 0.5, 3.0, 20.0}) {
                CHECK(std::abs(generalized_laguerre_function(k, 1e-8, t) - laguerre_function(k, t)) <=
                      1e-6);
            }
        }
    }
    SUBCASE("overflow guard") {
        CHECK_NOTHROW(generalized_laguerre_function(kMaxLaguerreDegree, 1.5, 10.0));
        CHECK_THROWS_AS(generalized_laguerre_function(kMaxLaguerreDegree + 1, 1.5, 10.0),
                        OverflowGuardError);
    }
    SUBCASE("large degree and argument stay finite") {
        const Eigen::VectorXd v = laguerre_function_values(400, 0.5, 2500.0);
        CHECK(v.allFinite());
        CHECK(v.cwiseAbs().maxCoeff() <= 1.0);
    }
}

TEST_CASE("orthonormality of Laguerre functions, 128-node Gauss-Laguerre") {
    const auto rule = oracle::gauss_laguerre(128);
    constexpr int kMax = 20;
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(kMax + 1, kMax + 1);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const Eigen::VectorXd v = laguerre_function_values(kMax + 1, 0.0, rule.nodes[i]);
        gram += rule.weights[i] * v * v.transpose();
    }
    const double err = (gram - Eigen::MatrixXd::Identity(kMax + 1, kMax + 1)).cwiseAbs().maxCoeff();
    CHECK(err <= 1e-8);
}

TEST_CASE("orthonormality of generalized Laguerre functions") {
    for (double nu : {0.5, 1.0}) {
        const auto rule = oracle::gauss_laguerre(64, nu);
        constexpr int kMax = 10;
        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(kMax + 1, kMax + 1);
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            const Eigen::VectorXd v = laguerre_function_values(kMax + 1, nu, rule.nodes[i]);
            gram += rule.weights[i] * v * v.transpose();
        }
        CAPTURE(nu);
        CHECK((gram - Eigen::MatrixXd::Identity(kMax + 1, kMax + 1)).cwiseAbs().maxCoeff() <= 1e-8);
    }
}

TEST_CASE("weighted basis is orthonormal under its design density") {
    constexpr int M = 21;
    auto gram_for = [&](const DesignDensity& h, double a, double b, int panels) {
        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(M, M);
        for (int j = 0; j < M; ++j) {
            for (int k = j; k < M; ++k) {
                gram(j, k) = oracle::integrate(
                    [&](double t) {
                        const Eigen::VectorXd v = weighted_basis_vector(t, M, h, 0.0);
                        return v[j] * v[k] * h(t);
                    },
                    a, b, panels);
                gram(k, j) = gram(j, k);
            }
        }
        return gram;
    };
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(M, M);
    SUBCASE("exponential") {
        for (double rate : {1.0, 4.0}) {
            CAPTURE(rate);
            // The tail beyond t = 150 contributes below 1e-15 for k <= 20.
            CHECK((gram_for(DesignDensity::exponential(rate), 1e-12, 150.0, 150) - eye)
                      .cwiseAbs()
                      .maxCoeff() <= 1e-8);
        }
    }
    SUBCASE("uniform with a support wide enough to hold the basis") {
        CHECK((gram_for(DesignDensity::uniform(0.0, 200.0), 0.0, 200.0, 200) - eye)
                  .cwiseAbs()
                  .maxCoeff() <= 1e-8);
    }
}

TEST_CASE("uniform bound |phi_k(t)| <= 1") {
    double worst = 0.0;
    for (double t = 0.0; t <= 300.0; t += 0.01) {
        worst = std::max(worst, laguerre_function_values(51, 0.0, t).cwiseAbs().maxCoeff());
    }
    CHECK(worst <= 1.0 + 1e-12);
}

TEST_CASE("weighted_basis_vector") {
    SUBCASE("unit density gives the plain functions") {
        const auto h = DesignDensity::uniform(0.0, 1.0);
        const Eigen::VectorXd v = weighted_basis_vector(0.4, 6, h, 0.0);
        for (int k = 0; k < 6; ++k) CHECK(v[k] == doctest::Approx(laguerre_function(k, 0.4)));
    }
    SUBCASE("exponential(4) at t = 0.25") {
        const Eigen::VectorXd v = weighted_basis_vector(0.25, 1, DesignDensity::exponential(4.0), 0.0);
        // exp(-1/8) / (2 exp(-1/2)) = exp(3/8) / 2
        CHECK(v[0] == doctest::Approx(0.72749570730910067).epsilon(1e-14));
    }
    SUBCASE("zero density is a floor violation") {
        CHECK_THROWS_AS(weighted_basis_vector(2.0, 3, DesignDensity::uniform(0.0, 1.0), 0.0),
                        DensityFloorError);
        CHECK_THROWS_AS(weighted_basis_vector(5.0, 3, DesignDensity::exponential(4.0, 1e-3), 0.0),
                        DensityFloorError);
        CHECK_NOTHROW(weighted_basis_vector(1.0, 3, DesignDensity::exponential(4.0, 1e-3), 0.0));
    }
}

TEST_CASE("empirical density") {
    std::mt19937_64 rng(7);
    std::exponential_distribution<double> expo(4.0);
    std::vector<double> sample(2000);
    for (double& s : sample) s = expo(rng);
    const auto h = DesignDensity::empirical(sample, 1e-3);
    CHECK(h.bandwidth() > 0.0);
    SUBCASE("clipped below at the floor") {
        CHECK(h(50.0) == doctest::Approx(1e-3));
        CHECK_THROWS_AS(h.checked(-1.0), DensityFloorError);
    }
    SUBCASE("close to the generating density in the bulk") {
        CHECK(h(0.5) == doctest::Approx(4.0 * std::exp(-2.0)).epsilon(0.15));
    }
    SUBCASE("integrates to about one") {
        const double mass = oracle::integrate([&](double t) { return h(t); }, 1e-9, 5.0, 200);
        CHECK(mass == doctest::Approx(1.0).epsilon(0.1));
    }
}
