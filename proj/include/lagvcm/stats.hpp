#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace lagvcm::stats {

double normal_cdf(double x);
/// Inverse of normal_cdf; p must lie in (0, 1).
double normal_quantile(double p);

/// Sample quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7). `sorted` must be ascending and non-empty.
double quantile_sorted(std::span<const double> sorted, double p);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// One-sample Kolmogorov-Smirnov test against N(0, 1).
KsResult ks_test_standard_normal(std::vector<double> sample);

/// One-sample Kolmogorov-Smirnov test against Exponential(rate).
KsResult ks_test_exponential(std::vector<double> sample, double rate);

/// Neumaier-compensated sum.
class CompensatedSum {
public:
    void add(double v) noexcept;
    double value() const noexcept { return sum_ + compensation_; }

private:
    double sum_ = 0.0;
    double compensation_ = 0.0;
};

/// Deterministic child seed for stream `index` of a parent seed (splitmix64).
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept;

} // namespace lagvcm::stats
