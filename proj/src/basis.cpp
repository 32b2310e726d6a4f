#include "lagvcm/basis.hpp"
#include "lagvcm/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace lagvcm {

namespace {

// Rescale threshold for the recurrence; keeps |L| well inside double range.
constexpr double kRescale = 1e150;
const double kLogRescale = std::log(kRescale);

void require_nonnegative_t(double t) {
    if (!(t >= 0.0)) {
        std::ostringstream os;
        os << "Laguerre evaluation requires t >= 0, got " << t;
        throw DomainError(os.str());
    }
}

/// Runs the generalized recurrence up to degree count-1 and hands every
/// L_k^(nu)(t) to `emit` as (k, mantissa, log_scale), value = mantissa * e^log_scale.
template <class Emit>
void laguerre_recurrence(int count, double nu, double t, Emit&& emit) {
    double prev = 0.0;  // L_{-1}
    double cur = 1.0;   // L_0
    double log_scale = 0.0;
    for (int k = 0; k < count; ++k) {
        emit(k, cur, log_scale);
        const double next = ((2.0 * k + 1.0 + nu - t) * cur - (k + nu) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
        if (std::abs(cur) > kRescale) {
            cur /= kRescale;
            prev /= kRescale;
            log_scale += kLogRescale;
        }
    }
}

} // namespace

void BasisSpec::validate() const {
    if (max_degree < 1) throw DomainError("BasisSpec: max_degree must be >= 1");
    if (!(generalized_order >= 0.0)) throw DomainError("BasisSpec: generalized_order must be >= 0");
}

double laguerre_polynomial(int k, double t) {
    if (k < 0) throw DomainError("laguerre_polynomial: negative degree");
    require_nonnegative_t(t);
    double result = 1.0;
    laguerre_recurrence(k + 1, 0.0, t, [&](int j, double mantissa, double log_scale) {
        if (j == k) result = mantissa * std::exp(log_scale);
    });
    return result;
}

double laguerre_function(int k, double t) {
    if (k < 0) throw DomainError("laguerre_function: negative degree");
    return laguerre_function_values(k + 1, 0.0, t)[k];
}

double generalized_laguerre_function(int k, double nu, double t) {
    if (k < 0) throw DomainError("generalized_laguerre_function: negative degree");
    return laguerre_function_values(k + 1, nu, t)[k];
}

Eigen::VectorXd laguerre_function_values(int count, double nu, double t) {
    if (count < 0) throw DomainError("laguerre_function_values: negative count");
    if (!(nu >= 0.0)) throw DomainError("generalized Laguerre order nu must be >= 0");
    require_nonnegative_t(t);
    if (nu > 0.0 && count - 1 > kMaxLaguerreDegree) {
        std::ostringstream os;
        os << "generalized Laguerre degree " << count - 1 << " exceeds the supported maximum "
           << kMaxLaguerreDegree;
        throw OverflowGuardError(os.str());
    }

    Eigen::VectorXd out(count);
    if (nu > 0.0 && t == 0.0) {
        out.setZero();  // t^(nu/2) vanishes
        return out;
    }
    // exp(-t/2) t^(nu/2) folded into the log scale so large t never overflows.
    const double log_prefactor = -0.5 * t + (nu > 0.0 ? 0.5 * nu * std::log(t) : 0.0);
    laguerre_recurrence(count, nu, t, [&](int k, double mantissa, double log_scale) {
        double log_norm = 0.0;
        if (nu > 0.0) log_norm = 0.5 * (std::lgamma(k + 1.0) - std::lgamma(k + nu + 1.0));
        out[k] = mantissa * std::exp(log_scale + log_prefactor + log_norm);
    });
    return out;
}

// ---------------------------------------------------------------------------
// DesignDensity

DesignDensity::DesignDensity(Family family, double p0, double p1, double floor)
    : family_(family), p0_(p0), p1_(p1), floor_(floor) {}

DesignDensity DesignDensity::exponential(double rate, double floor) {
    if (!(rate > 0.0)) throw DomainError("exponential density: rate must be positive");
    if (!(floor >= 0.0)) throw DomainError("density floor must be >= 0");
    return DesignDensity(Family::exponential, rate, 0.0, floor);
}

DesignDensity DesignDensity::uniform(double a, double b, double floor) {
    if (!(a >= 0.0 && b > a)) throw DomainError("uniform density: need 0 <= a < b");
    if (!(floor >= 0.0)) throw DomainError("density floor must be >= 0");
    return DesignDensity(Family::uniform, a, b, floor);
}

DesignDensity DesignDensity::empirical(std::span<const double> sample, double floor,
                                       double bandwidth) {
    if (sample.size() < 2) throw DomainError("empirical density: need at least two points");
    if (!(floor > 0.0)) throw DomainError("empirical density: floor must be positive");
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    if (!(sorted.front() > 0.0)) throw DomainError("empirical density: sample must be positive");

    if (!(bandwidth > 0.0)) {
        const auto n = static_cast<double>(sorted.size());
        double mean = 0.0;
        for (double v : sorted) mean += v;
        mean /= n;
        double ss = 0.0;
        for (double v : sorted) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / (n - 1.0));
        auto quantile = [&](double p) {
            const double pos = p * (n - 1.0);
            const auto lo = static_cast<std::size_t>(std::floor(pos));
            const auto hi = std::min(lo + 1, sorted.size() - 1);
            return sorted[lo] + (pos - std::floor(pos)) * (sorted[hi] - sorted[lo]);
        };
        const double iqr = quantile(0.75) - quantile(0.25);
        double spread = sd;
        if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
        bandwidth = 0.9 * spread * std::pow(n, -0.2);
        if (!(bandwidth > 0.0)) throw DomainError("empirical density: degenerate sample");
    }
    DesignDensity d(Family::empirical, bandwidth, 0.0, floor);
    d.sample_ = std::move(sorted);
    return d;
}

double DesignDensity::operator()(double t) const {
    switch (family_) {
    case Family::exponential:
        return t < 0.0 ? 0.0 : p0_ * std::exp(-p0_ * t);
    case Family::uniform:
        return (t < p0_ || t > p1_) ? 0.0 : 1.0 / (p1_ - p0_);
    case Family::empirical: {
        if (t <= 0.0) return 0.0;
        const double b = p0_;
        const double reach = 8.0 * b;
        auto first = std::lower_bound(sample_.begin(), sample_.end(), t - reach);
        auto last = std::upper_bound(first, sample_.end(), t + reach);
        double sum = 0.0;
        for (auto it = first; it != last; ++it) {
            const double u = (t - *it) / b;
            sum += std::exp(-0.5 * u * u);
        }
        const double kde = sum / (static_cast<double>(sample_.size()) * b *
                                  std::sqrt(2.0 * std::numbers::pi));
        return std::max(kde, floor_);
    }
    }
    return 0.0;
}

double DesignDensity::checked(double t) const {
    const double h = (*this)(t);
    if (!(h > 0.0) || h < floor_) throw DensityFloorError(t, h, floor_);
    return h;
}

Eigen::VectorXd weighted_basis_vector(double t, int M, const DesignDensity& h, double nu) {
    if (M < 1) throw DomainError("weighted_basis_vector: M must be >= 1");
    const double density = h.checked(t);
    return laguerre_function_values(M, nu, t) / std::sqrt(density);
}

} // namespace lagvcm
