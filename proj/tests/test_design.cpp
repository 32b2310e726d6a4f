#include "lagvcm/design.hpp"
#include "lagvcm/error.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>

using namespace lagvcm;

TEST_CASE("theta_index layout") {
    const TruncationPlan plan{3, 4};
    CHECK(theta_index(0, 0, TruncationPlan{5}) == 0);
    CHECK(theta_index(1, 0, plan) == 3);
    CHECK(theta_index(1, 3, plan) == 6);
    CHECK(plan.total() == 7);

    SUBCASE("bijective over valid pairs") {
        const TruncationPlan wide{2, 5, 1, 3};
        std::vector<Eigen::Index> seen;
        for (std::size_t l = 0; l < wide.size(); ++l)
            for (int k = 0; k < wide.level(l); ++k) seen.push_back(theta_index(l, k, wide));
        std::vector<Eigen::Index> expect(static_cast<std::size_t>(wide.total()));
        std::iota(expect.begin(), expect.end(), Eigen::Index{0});
        CHECK(seen == expect);
    }
    SUBCASE("out of range") {
        CHECK_THROWS_AS(theta_index(0, 3, plan), OutOfRangeError);
        CHECK_THROWS_AS(theta_index(2, 0, plan), OutOfRangeError);
        CHECK_THROWS_AS(theta_index(0, -1, plan), OutOfRangeError);
    }
    SUBCASE("plan validation") {
        CHECK_THROWS_AS(TruncationPlan({2, 0}), DomainError);
        CHECK_THROWS_AS(TruncationPlan(std::vector<int>{}), DomainError);
    }
}

TEST_CASE("dataset validation") {
    Eigen::VectorXd t(3), y(3);
    t << 0.2, 0.5, 1.0;
    y << 1, 2, 3;
    Eigen::MatrixXd x = Eigen::MatrixXd::Ones(3, 2);
    CHECK_NOTHROW(Dataset(t, x, y));
    CHECK_THROWS_AS(Dataset(t, Eigen::MatrixXd::Ones(2, 2), y), DimensionError);
    Eigen::VectorXd bad = t;
    bad[1] = 0.0;
    CHECK_THROWS_AS(Dataset(bad, x, y), DomainError);
}

TEST_CASE("assemble_design") {
    SUBCASE("unit covariates and unit density") {
        Eigen::VectorXd t(4), y = Eigen::VectorXd::Zero(4);
        t << 0.1, 0.3, 0.6, 0.9;
        const Dataset data(t, Eigen::MatrixXd::Ones(4, 2), y);
        const Eigen::MatrixXd phi = assemble_design(data, {1, 1}, DesignDensity::uniform(0.0, 1.0), 0.0);
        for (Eigen::Index i = 0; i < 4; ++i) {
            CHECK(phi(i, 0) == doctest::Approx(std::exp(-t[i] / 2)));
            CHECK(phi(i, 1) == doctest::Approx(std::exp(-t[i] / 2)));
        }
    }
    SUBCASE("hand-computed 3x3 instance") {
        // Under h = Exp(1), phi~_k(t) = L_k(t): phi~_0 = 1, phi~_1 = 1 - t.
        Eigen::VectorXd t(3), y = Eigen::VectorXd::Zero(3);
        t << 0.5, 1.0, 2.0;
        Eigen::MatrixXd x(3, 2);
        x << 1.0, 2.0, 3.0, -1.0, 0.5, 4.0;
        const Dataset data(t, x, y);
        Eigen::MatrixXd expect(3, 3);
        expect << 1.0, 0.5, 2.0, 3.0, 0.0, -1.0, 0.5, -0.5, 4.0;
        const Eigen::MatrixXd phi = assemble_design(data, {2, 1}, DesignDensity::exponential(1.0), 0.0);
        CHECK((phi - expect).cwiseAbs().maxCoeff() <= 1e-14);
    }
    SUBCASE("linear in each covariate") {
        std::mt19937_64 rng(3);
        Eigen::VectorXd t = oracle::random_matrix(rng, 20, 1).cwiseAbs().col(0).array() + 0.01;
        const Eigen::MatrixXd x = oracle::random_matrix(rng, 20, 2);
        Eigen::MatrixXd scaled = x;
        scaled.col(1) *= 2.5;
        const auto h = DesignDensity::exponential(2.0);
        const Eigen::MatrixXd a = assemble_design(Dataset(t, x, Eigen::VectorXd::Zero(20)), {3, 4}, h, 0.0);
        const Eigen::MatrixXd b =
            assemble_design(Dataset(t, scaled, Eigen::VectorXd::Zero(20)), {3, 4}, h, 0.0);
        CHECK((b.leftCols(3) - a.leftCols(3)).cwiseAbs().maxCoeff() == 0.0);
        CHECK((b.rightCols(4) - 2.5 * a.rightCols(4)).cwiseAbs().maxCoeff() <= 1e-12);
    }
    SUBCASE("too few observations") {
        Eigen::VectorXd t(3);
        t << 0.1, 0.2, 0.3;
        const Dataset data(t, Eigen::MatrixXd::Ones(3, 2), Eigen::VectorXd::Zero(3));
        CHECK_THROWS_AS(assemble_design(data, {2, 2}, DesignDensity::exponential(1.0), 0.0),
                        DimensionError);
        CHECK_THROWS_AS(assemble_design(data, {1}, DesignDensity::exponential(1.0), 0.0),
                        DimensionError);
    }
    SUBCASE("density floor propagates") {
        Eigen::VectorXd t(3);
        t << 0.1, 0.2, 3.0;
        const Dataset data(t, Eigen::MatrixXd::Ones(3, 2), Eigen::VectorXd::Zero(3));
        CHECK_THROWS_AS(assemble_design(data, {1, 1}, DesignDensity::uniform(0.0, 1.0), 0.0),
                        DensityFloorError);
    }
}

TEST_CASE("solve_least_squares") {
    std::mt19937_64 rng(11);
    SUBCASE("consistent system is recovered") {
        const Eigen::MatrixXd phi = oracle::random_matrix(rng, 40, 7);
        const Eigen::VectorXd theta = oracle::random_matrix(rng, 7, 1).col(0);
        const Eigen::VectorXd got = solve_least_squares(phi, phi * theta);
        CHECK((got - theta).cwiseAbs().maxCoeff() <= 1e-8);
    }
    SUBCASE("random 50x6 instance matches the normal-equations oracle") {
        const Eigen::MatrixXd phi = oracle::random_matrix(rng, 50, 6);
        const Eigen::VectorXd y = oracle::random_matrix(rng, 50, 1).col(0);
        const Eigen::VectorXd got = solve_least_squares(phi, y);
        const Eigen::VectorXd ref = oracle::normal_equations(phi, y);
        CHECK((got - ref).norm() <= 1e-10 * ref.norm());
    }
    SUBCASE("duplicated column is rank deficient") {
        Eigen::MatrixXd phi = oracle::random_matrix(rng, 30, 6);
        phi.col(4) = phi.col(1);
        try {
            solve_least_squares(phi, Eigen::VectorXd::Ones(30));
            FAIL("expected RankDeficientError");
        } catch (const RankDeficientError& e) {
            CHECK(e.rank() == 5);
            CHECK(e.columns() == 6);
        }
    }
    SUBCASE("more columns than rows") {
        CHECK_THROWS_AS(LeastSquares(oracle::random_matrix(rng, 3, 5)), DimensionError);
    }
}

TEST_CASE("least-squares properties over random instances") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> cols(1, 12);
    std::uniform_int_distribution<int> extra(0, 488);
    for (int trial = 0; trial < 60; ++trial) {
        const int p = cols(rng);
        const int n = p + 1 + extra(rng) % (500 - p);
        Eigen::MatrixXd phi = oracle::random_matrix(rng, n, p);
        // Uneven column scales, as in the Laguerre designs.
        for (int j = 0; j < p; ++j) phi.col(j) *= std::pow(10.0, (j % 4) - 1.0);
        const Eigen::VectorXd y = oracle::random_matrix(rng, n, 1).col(0) * 3.0;
        CAPTURE(n);
        CAPTURE(p);

        const LeastSquares ls(phi);
        const Eigen::VectorXd theta = ls.solve(y);

        const Eigen::VectorXd ref = oracle::normal_equations(phi, y);
        CHECK((theta - ref).norm() <= 1e-10 * ref.norm());

        const Eigen::VectorXd normal = phi.transpose() * (y - phi * theta);
        CHECK(normal.cwiseAbs().maxCoeff() <= 1e-8 * (phi.transpose() * y).cwiseAbs().maxCoeff());

        std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
        std::iota(perm.begin(), perm.end(), Eigen::Index{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        Eigen::MatrixXd phi_p(n, p);
        Eigen::VectorXd y_p(n);
        for (int i = 0; i < n; ++i) {
            phi_p.row(i) = phi.row(perm[static_cast<std::size_t>(i)]);
            y_p[i] = y[perm[static_cast<std::size_t>(i)]];
        }
        CHECK((solve_least_squares(phi_p, y_p) - theta).norm() <= 1e-10 * theta.norm());

        if (n <= 120) {
            const Eigen::MatrixXd inv = (phi.transpose() * phi).inverse();
            const Eigen::MatrixXd hat = phi * inv * phi.transpose();
            CHECK((ls.leverages() - hat.diagonal()).cwiseAbs().maxCoeff() <= 1e-10);
            CHECK((ls.inverse_gram() - inv).cwiseAbs().maxCoeff() <= 1e-9 * inv.cwiseAbs().maxCoeff());
        }
    }
}
