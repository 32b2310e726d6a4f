#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace lagvcm {

/// Largest degree accepted by the generalized Laguerre evaluators.
inline constexpr int kMaxLaguerreDegree = 500;

/// Truncation level and generalized order of a Laguerre basis.
struct BasisSpec {
    int max_degree = 1;              ///< number of functions M (indices 0..M-1)
    double generalized_order = 0.0;  ///< nu; 0 selects the standard basis

    void validate() const;
};

/// Laguerre polynomial L_k(t) by the three-term recurrence.
double laguerre_polynomial(int k, double t);

/// Laguerre function phi_k(t) = exp(-t/2) L_k(t).
double laguerre_function(int k, double t);

/// Generalized Laguerre function
///   phi_k^(nu)(t) = sqrt(k! / Gamma(k+nu+1)) L_k^(nu)(t) t^(nu/2) exp(-t/2).
/// Throws OverflowGuardError for k > kMaxLaguerreDegree.
double generalized_laguerre_function(int k, double nu, double t);

/// phi_0^(nu)(t), ..., phi_{count-1}^(nu)(t) from a single recurrence pass.
Eigen::VectorXd laguerre_function_values(int count, double nu, double t);

/// Design density h of the effect modifier t.
///
/// Every family carries a floor m0: evaluating the weighted basis at a point
/// where h(t) < m0 (or h(t) <= 0) is an error. The empirical family is a
/// Gaussian kernel density estimate clipped below at m0, so it never trips
/// the floor inside its own support.
class DesignDensity {
public:
    enum class Family { exponential, uniform, empirical };

    static DesignDensity exponential(double rate, double floor = 0.0);
    static DesignDensity uniform(double a, double b, double floor = 0.0);
    /// bandwidth <= 0 selects Silverman's rule of thumb.
    static DesignDensity empirical(std::span<const double> sample, double floor = 1e-3,
                                   double bandwidth = 0.0);

    double operator()(double t) const;

    Family family() const noexcept { return family_; }
    double floor() const noexcept { return floor_; }
    double rate() const noexcept { return p0_; }
    double lower() const noexcept { return p0_; }
    double upper() const noexcept { return p1_; }
    double bandwidth() const noexcept { return p0_; }
    const std::vector<double>& sample() const noexcept { return sample_; }

    /// Throws DensityFloorError when h(t) is below the floor or not positive.
    double checked(double t) const;

private:
    DesignDensity(Family family, double p0, double p1, double floor);

    Family family_;
    double p0_;
    double p1_;
    double floor_;
    std::vector<double> sample_;  // sorted, empirical family only
};

/// (phi~_0(t), ..., phi~_{M-1}(t)) with phi~_k = phi_k^(nu) / sqrt(h(t)).
Eigen::VectorXd weighted_basis_vector(double t, int M, const DesignDensity& h, double nu);

} // namespace lagvcm
