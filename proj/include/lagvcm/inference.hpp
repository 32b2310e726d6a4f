#pragma once

#include "lagvcm/design.hpp"
#include "lagvcm/estimator.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace lagvcm {

/// Gamma^_n = (1/n) sum_i x_li^2 phi~(t_i) phi~(t_i)^T for coefficient l with
/// M basis functions. Throws SingularMatrixError if the result is not
/// numerically positive definite.
Eigen::MatrixXd estimate_gamma(const Dataset& data, std::size_t l, int M, const DesignDensity& h,
                               double nu);

/// Ingredients of the asymptotic variance pi_alpha phi~^T Gamma^{-1} phi~.
class VarianceModel {
public:
    /// Validates alpha in (0,1], pi_alpha > 0, and Gamma symmetric positive definite.
    VarianceModel(double alpha, double pi_alpha, Eigen::MatrixXd gamma);

    double alpha() const noexcept { return alpha_; }
    double pi_alpha() const noexcept { return pi_alpha_; }
    const Eigen::MatrixXd& gamma() const noexcept { return gamma_; }
    /// v^T Gamma^{-1} v.
    double quadratic_form(const Eigen::VectorXd& v) const;

private:
    double alpha_;
    double pi_alpha_;
    Eigen::MatrixXd gamma_;
    Eigen::LLT<Eigen::MatrixXd> factor_;
};

/// Builds the model for coefficient l of a fit. With alpha = 1 and no
/// pi_alpha given, the plug-in is the residual variance of the fit; for
/// alpha < 1 the caller must supply the long-memory constant.
VarianceModel make_variance_model(const Dataset& data, const FittedVCM& fit, std::size_t l,
                                  double alpha = 1.0, std::optional<double> pi_alpha = {});

/// sigma^_l^2(t).
double asymptotic_variance(const FittedVCM& fit, std::size_t l, double t, const VarianceModel& model);

struct ConfidenceInterval {
    double estimate = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

/// beta^_l(t) -/+ z_{1-level/2} n^{-alpha/2} sigma^_l(t). `level` is the
/// significance level, so 0.05 yields a 95% interval.
ConfidenceInterval confidence_interval(const FittedVCM& fit, std::size_t l, double t, double level,
                                       const VarianceModel& model);

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    bool reject = false;
    double level = 0.05;
};

/// Two-sided test of H0: beta_l(t0) = beta0 using
/// T = sqrt(n^alpha) (beta^_l(t0) - beta0) / sigma^_l(t0).
TestResult pointwise_test(const FittedVCM& fit, std::size_t l, double t0, double beta0, double level,
                          const VarianceModel& model);

/// 1 - Phi(z_{level/2} - delta/sigma) + Phi(-z_{level/2} - delta/sigma).
double asymptotic_power(double delta, double sigma, double level);

/// Pointwise percentile bands; matrices are r x grid size.
struct CoefficientBands {
    std::vector<double> t_grid;
    Eigen::MatrixXd lower;
    Eigen::MatrixXd estimate;
    Eigen::MatrixXd upper;
};

/// Pairs bootstrap: resamples rows with replacement B times, refits with the
/// given plan and takes pointwise percentiles of beta^_l on t_grid. A
/// resample whose design is singular is redrawn up to 10 times.
CoefficientBands bootstrap_bands(const Dataset& data, const TruncationPlan& plan,
                                 const DesignDensity& h, double nu, int B, double level,
                                 std::span<const double> t_grid, std::uint64_t seed,
                                 unsigned threads = 0);

} // namespace lagvcm
