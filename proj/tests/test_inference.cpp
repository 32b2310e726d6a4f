#include "lagvcm/error.hpp"
#include "lagvcm/inference.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace lagvcm;

namespace {

Dataset noisy_data(std::mt19937_64& rng, Eigen::Index n, Eigen::Index r) {
    std::exponential_distribution<double> expo(1.0);
    std::normal_distribution<double> z;
    Eigen::VectorXd t(n), y(n);
    Eigen::MatrixXd x(n, r);
    for (Eigen::Index i = 0; i < n; ++i) {
        t[i] = expo(rng) + 1e-6;
        y[i] = 0.0;
        for (Eigen::Index l = 0; l < r; ++l) {
            x(i, l) = z(rng);
            y[i] += x(i, l) * std::exp(-t[i] / (l + 1.0));
        }
        y[i] += 0.5 * z(rng);
    }
    return Dataset(t, x, y);
}

/// Inverse of the normal cdf by bisection.
double bisect_quantile(double p) {
    double lo = -40.0, hi = 40.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (oracle::normal_cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

TEST_CASE("estimate_gamma matches the explicit sum") {
    std::mt19937_64 rng(11);
    const Dataset data = noisy_data(rng, 80, 2);
    const auto h = DesignDensity::exponential(1.0);
    const int M = 4;
    for (std::size_t l = 0; l < 2; ++l) {
        Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(M, M);
        for (Eigen::Index i = 0; i < data.n(); ++i) {
            Eigen::VectorXd v(M);
            for (int k = 0; k < M; ++k) v[k] = static_cast<double>(oracle::laguerre_pair(k, 0.0L, data.t()[i]).first);
            const double x = data.x()(i, static_cast<Eigen::Index>(l));
            expected += x * x * v * v.transpose();
        }
        expected /= static_cast<double>(data.n());
        const Eigen::MatrixXd gamma = estimate_gamma(data, l, M, h, 0.0);
        CHECK((gamma - expected).cwiseAbs().maxCoeff() < 1e-10 * expected.cwiseAbs().maxCoeff());
        CHECK((gamma - gamma.transpose()).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("estimate_gamma approaches E[x^2] I under the matching density") {
    std::mt19937_64 rng(3);
    const Dataset data = noisy_data(rng, 40000, 1);
    const Eigen::MatrixXd gamma = estimate_gamma(data, 0, 3, DesignDensity::exponential(1.0), 0.0);
    CHECK((gamma - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 0.06);
}

TEST_CASE("estimate_gamma rejects degenerate designs") {
    Eigen::VectorXd t = Eigen::VectorXd::Constant(10, 0.5);
    Eigen::MatrixXd x = Eigen::MatrixXd::Ones(10, 1);
    const Dataset data(t, x, Eigen::VectorXd::Zero(10));
    CHECK_THROWS_AS(estimate_gamma(data, 0, 3, DesignDensity::exponential(1.0), 0.0), SingularMatrixError);
    CHECK_THROWS_AS(estimate_gamma(data, 1, 1, DesignDensity::exponential(1.0), 0.0), OutOfRangeError);
}

TEST_CASE("VarianceModel validation") {
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(2, 2);
    CHECK_THROWS_AS(VarianceModel(0.0, 1.0, id), DomainError);
    CHECK_THROWS_AS(VarianceModel(1.2, 1.0, id), DomainError);
    CHECK_THROWS_AS(VarianceModel(1.0, 0.0, id), DomainError);
    Eigen::MatrixXd indefinite(2, 2);
    indefinite << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS_AS(VarianceModel(1.0, 1.0, indefinite), SingularMatrixError);
    Eigen::MatrixXd skew(2, 2);
    skew << 1.0, 0.5, 0.0, 1.0;
    CHECK_THROWS_AS(VarianceModel(1.0, 1.0, skew), SingularMatrixError);
}

TEST_CASE("asymptotic variance equals pi phi^T Gamma^{-1} phi with a dense Gamma") {
    std::mt19937_64 rng(21);
    const Dataset data = noisy_data(rng, 300, 2);
    const auto h = DesignDensity::exponential(1.0);
    const FittedVCM f = fit(data, TruncationPlan{4, 3}, h, 0.0);
    for (std::size_t l = 0; l < 2; ++l) {
        const VarianceModel model = make_variance_model(data, f, l);
        CHECK(model.pi_alpha() == doctest::Approx(f.residual_variance()).epsilon(1e-15));
        const Eigen::MatrixXd inverse = model.gamma().inverse();
        for (double t : {0.05, 0.3, 1.0, 2.5}) {
            Eigen::VectorXd v(model.gamma().rows());
            for (int k = 0; k < v.size(); ++k) v[k] = static_cast<double>(oracle::laguerre_pair(k, 0.0L, t).first);
            const double expected = model.pi_alpha() * v.dot(inverse * v);
            CHECK(asymptotic_variance(f, l, t, model) == doctest::Approx(expected).epsilon(1e-10));
        }
    }
    CHECK_THROWS_AS(make_variance_model(data, f, 0, 0.6), DomainError);
    CHECK_NOTHROW(make_variance_model(data, f, 0, 0.6, 2.0));
}

TEST_CASE("confidence interval half-width") {
    std::mt19937_64 rng(8);
    const Dataset data = noisy_data(rng, 100, 1);
    const auto h = DesignDensity::exponential(1.0);
    const FittedVCM f = fit(data, TruncationPlan{1}, h, 0.0);
    // M = 1 under Exp(1): phi~_0 = 1, so sigma^2 = pi / Gamma_00.
    const VarianceModel model(1.0, 1.0, Eigen::MatrixXd::Identity(1, 1));
    const ConfidenceInterval ci = confidence_interval(f, 0, 0.4, 0.05, model);
    CHECK((ci.upper - ci.lower) / 2.0 == doctest::Approx(0.1959963984540054).epsilon(1e-13));
    CHECK((ci.upper - ci.lower) / 2.0 == doctest::Approx(bisect_quantile(0.975) / 10.0).epsilon(1e-12));
    CHECK(ci.estimate == doctest::Approx(f.coefficient(0, 0.4)));

    // width scales as n^{-alpha/2}
    const VarianceModel slow(0.5, 1.0, Eigen::MatrixXd::Identity(1, 1));
    const ConfidenceInterval wide = confidence_interval(f, 0, 0.4, 0.05, slow);
    CHECK((wide.upper - wide.lower) / (ci.upper - ci.lower) == doctest::Approx(std::pow(100.0, 0.25)));

    CHECK_THROWS_AS(confidence_interval(f, 0, 0.4, 0.0, model), DomainError);
    CHECK_THROWS_AS(confidence_interval(f, 0, 0.4, 1.0, model), DomainError);
}

TEST_CASE("test and interval are dual, p-value agrees with the decision") {
    std::mt19937_64 rng(31);
    const Dataset data = noisy_data(rng, 400, 2);
    const auto h = DesignDensity::exponential(1.0);
    const FittedVCM f = fit(data, TruncationPlan{3, 3}, h, 0.0);
    std::uniform_real_distribution<double> u(-0.5, 0.5), tt(0.05, 3.0);
    const double levels[] = {0.01, 0.05, 0.1, 0.2};
    for (std::size_t l = 0; l < 2; ++l) {
        const VarianceModel model = make_variance_model(data, f, l);
        for (int trial = 0; trial < 300; ++trial) {
            const double t0 = tt(rng);
            const double level = levels[trial % 4];
            const ConfidenceInterval ci = confidence_interval(f, l, t0, level, model);
            const double beta0 = ci.estimate + u(rng);
            const TestResult res = pointwise_test(f, l, t0, beta0, level, model);
            const bool outside = beta0 < ci.lower || beta0 > ci.upper;
            CHECK(res.reject == outside);
            CHECK(res.reject == (res.p_value < level));
            const double sigma = std::sqrt(asymptotic_variance(f, l, t0, model));
            CHECK(res.statistic == doctest::Approx(std::sqrt(400.0) * (ci.estimate - beta0) / sigma));
            CHECK(res.p_value == doctest::Approx(2.0 * (1.0 - oracle::normal_cdf(std::abs(res.statistic)))).epsilon(1e-9));
        }
    }
}

TEST_CASE("asymptotic power") {
    CHECK(asymptotic_power(0.0, 1.0, 0.05) == 0.05);
    CHECK(asymptotic_power(0.0, 3.0, 0.1) == 0.1);
    CHECK(asymptotic_power(1e-300, 1.0, 0.05) == doctest::Approx(0.05).epsilon(1e-14));
    CHECK(asymptotic_power(1.959964, 1.0, 0.05) == doctest::Approx(0.5000442938839459).epsilon(1e-12));
    double previous = 0.0;
    for (double d = 0.0; d <= 6.0; d += 0.25) {
        const double p = asymptotic_power(d, 1.0, 0.05);
        CHECK(p >= previous);
        CHECK(p == doctest::Approx(asymptotic_power(-d, 1.0, 0.05)).epsilon(1e-14));
        const double z = bisect_quantile(0.975);
        CHECK(p == doctest::Approx(1.0 - oracle::normal_cdf(z - d) + oracle::normal_cdf(-z - d)).epsilon(1e-10));
        previous = p;
    }
    CHECK_THROWS_AS(asymptotic_power(1.0, 0.0, 0.05), DomainError);
    CHECK_THROWS_AS(asymptotic_power(1.0, 1.0, 1.5), DomainError);
}

TEST_CASE("bootstrap bands") {
    std::mt19937_64 rng(44);
    const Dataset data = noisy_data(rng, 150, 2);
    const auto h = DesignDensity::exponential(1.0);
    const TruncationPlan plan{3, 2};
    const std::vector<double> grid{0.1, 0.5, 1.0, 2.0};
    const CoefficientBands a = bootstrap_bands(data, plan, h, 0.0, 120, 0.1, grid, 99, 1);
    const CoefficientBands b = bootstrap_bands(data, plan, h, 0.0, 120, 0.1, grid, 99, 3);
    const CoefficientBands c = bootstrap_bands(data, plan, h, 0.0, 120, 0.1, grid, 100, 1);
    REQUIRE(a.lower.rows() == 2);
    REQUIRE(a.lower.cols() == 4);
    CHECK(a.lower == b.lower);
    CHECK(a.upper == b.upper);
    CHECK(a.lower != c.lower);
    const FittedVCM f = fit(data, plan, h, 0.0);
    for (Eigen::Index g = 0; g < 4; ++g) {
        CHECK(a.estimate.col(g).isApprox(f.coefficients(grid[static_cast<std::size_t>(g)])));
        for (Eigen::Index l = 0; l < 2; ++l) {
            CHECK(a.lower(l, g) < a.upper(l, g));
            CHECK(a.lower(l, g) < a.estimate(l, g));
            CHECK(a.estimate(l, g) < a.upper(l, g));
        }
    }
    CHECK_THROWS_AS(bootstrap_bands(data, plan, h, 0.0, 50, 0.1, grid, 1), DomainError);
    CHECK_THROWS_AS(bootstrap_bands(data, plan, h, 0.0, 100, 0.1, std::vector<double>{}, 1), DomainError);
}
