#pragma once

#include "lagvcm/basis.hpp"
#include "lagvcm/design.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace lagvcm {

/// Laguerre-series fit of a varying-coefficient model.
///
/// beta_l(t) is estimated by sum_{k < M_l} theta_lk phi~_k(t), where theta is
/// the least-squares solution of the block design. The object is immutable
/// and may be shared between threads.
class FittedVCM {
public:
    FittedVCM(CoefficientVector theta, DesignDensity density, double nu, Eigen::Index n,
              Eigen::VectorXd residuals);

    const CoefficientVector& theta() const noexcept { return theta_; }
    const TruncationPlan& plan() const noexcept { return theta_.plan; }
    const DesignDensity& density() const noexcept { return density_; }
    double nu() const noexcept { return nu_; }
    Eigen::Index n() const noexcept { return n_; }
    std::size_t r() const noexcept { return theta_.plan.size(); }
    const Eigen::VectorXd& residuals() const noexcept { return residuals_; }

    /// Residual sum of squares divided by n - sum(M_l); falls back to /n when
    /// the fit is saturated.
    double residual_variance() const;

    double coefficient(std::size_t l, double t) const;
    Eigen::VectorXd coefficients(double t) const;
    double predict(double t, std::span<const double> x) const;

private:
    CoefficientVector theta_;
    DesignDensity density_;
    double nu_;
    Eigen::Index n_;
    Eigen::VectorXd residuals_;
};

FittedVCM fit(const Dataset& data, const TruncationPlan& plan, const DesignDensity& h, double nu);

/// beta^_l(t).
double evaluate_coefficient(const FittedVCM& fit, std::size_t l, double t);
/// (beta^_1(t), ..., beta^_r(t)).
Eigen::VectorXd evaluate_coefficient_vector(const FittedVCM& fit, double t);
/// sum_l beta^_l(t) x_l. Throws DimensionError if x.size() != r.
double predict(const FittedVCM& fit, double t, std::span<const double> x);

/// Smoothness class parameters used by the theoretical truncation rule.
struct SmoothnessSpec {
    std::vector<double> gamma;   ///< Sobolev regularity per coefficient
    std::vector<double> radius;  ///< Sobolev radius A_l per coefficient
    double alpha = 1.0;          ///< long-memory parameter in (0, 1]

    void validate() const;
};

/// M_l = max(1, round((A_l^2 n^alpha)^(1/(2 gamma_l + 1)))), rounding half up.
TruncationPlan theoretical_truncation(const SmoothnessSpec& spec, std::size_t n);

/// Inclusive integer range of candidate truncation levels for one coefficient.
struct LevelRange {
    int lo = 1;
    int hi = 1;
};

enum class GridSearch {
    automatic,   ///< Cartesian for r <= 2, coordinate descent otherwise
    cartesian,
    coordinate,
};

struct TruncationSelection {
    TruncationPlan plan;
    double cv_score = 0.0;
    std::size_t candidates_evaluated = 0;
};

/// M_l in {1, ..., min(12, floor(n / (4 r)))} for every coefficient.
std::vector<LevelRange> default_truncation_grid(std::size_t n, std::size_t r);

/// Leave-one-out prediction error sum_i (r_i / (1 - H_ii))^2 / n.
/// Throws like fit(); a leverage of one makes the score infinite.
double loocv_score(const Dataset& data, const TruncationPlan& plan, const DesignDensity& h,
                   double nu);

/// Minimises loocv_score over the grid. Ties go to the smaller total, then
/// to the lexicographically smaller plan. Candidates with n <= sum(M_l) or a
/// rank-deficient design are skipped.
/// Throws DomainError on an empty grid and RankDeficientError when no
/// candidate can be fitted.
TruncationSelection select_truncation_loocv(const Dataset& data,
                                            std::span<const LevelRange> grid,
                                            const DesignDensity& h, double nu,
                                            GridSearch search = GridSearch::automatic);

} // namespace lagvcm
