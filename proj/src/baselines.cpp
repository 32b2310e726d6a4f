#include "lagvcm/baselines.hpp"
#include "lagvcm/error.hpp"
#include "lagvcm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

namespace lagvcm {

void KernelConfig::validate() const {
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
        std::ostringstream os;
        os << "kernel bandwidth must be positive and finite, got " << bandwidth;
        throw DomainError(os.str());
    }
}

double kernel_weight(const KernelConfig& cfg, double u) {
    const double v = u / cfg.bandwidth;
    switch (cfg.kernel) {
    case KernelType::epanechnikov:
        return std::abs(v) < 1.0 ? 0.75 * (1.0 - v * v) / cfg.bandwidth : 0.0;
    case KernelType::gaussian:
        return std::exp(-0.5 * v * v) / (std::sqrt(2.0 * std::numbers::pi) * cfg.bandwidth);
    }
    return 0.0;
}

KernelSmoother::KernelSmoother(const Dataset& data, KernelMethod method)
    : data_(data), method_(method), order_(static_cast<std::size_t>(data.n())) {
    std::iota(order_.begin(), order_.end(), Eigen::Index{0});
    const auto& t = data_.t();
    std::stable_sort(order_.begin(), order_.end(), [&](Eigen::Index a, Eigen::Index b) { return t[a] < t[b]; });
    sorted_t_.reserve(order_.size());
    for (Eigen::Index i : order_) sorted_t_.push_back(t[i]);
}

KernelSmoother::LocalFit KernelSmoother::fit_at(double t, const KernelConfig& cfg,
                                                std::optional<Eigen::Index> exclude,
                                                std::optional<Eigen::Index> track) const {
    cfg.validate();
    if (!std::isfinite(t)) throw DomainError("kernel fit: t must be finite");
    const double h = cfg.bandwidth;
    std::size_t first = 0, last = sorted_t_.size();
    if (cfg.kernel == KernelType::epanechnikov) {
        first = static_cast<std::size_t>(std::upper_bound(sorted_t_.begin(), sorted_t_.end(), t - h) - sorted_t_.begin());
        last = static_cast<std::size_t>(std::lower_bound(sorted_t_.begin(), sorted_t_.end(), t + h) - sorted_t_.begin());
        last = std::max(first, last);
    }

    const Eigen::Index r = data_.r();
    const bool linear = method_ == KernelMethod::local_linear;
    const Eigen::Index cols = linear ? 2 * r : r;
    Eigen::MatrixXd design(static_cast<Eigen::Index>(last - first), cols);
    Eigen::VectorXd response(design.rows());
    Eigen::Index rows = 0, tracked = -1;
    double spread = 0.0;
    for (std::size_t j = first; j < last; ++j) {
        const Eigen::Index i = order_[j];
        if (exclude && *exclude == i) continue;
        const double d = data_.t()[i] - t;
        const double w = kernel_weight(cfg, d);
        if (!(w > 0.0)) continue;
        const double s = std::sqrt(w);
        design.row(rows).head(r) = s * data_.x().row(i);
        if (linear) design.row(rows).tail(r) = (s * d / h) * data_.x().row(i);
        response[rows] = s * data_.y()[i];
        spread = std::max(spread, std::abs(d / h));
        if (track && *track == i) tracked = rows;
        ++rows;
    }

    const Eigen::Index needed = linear ? 2 * r : r;
    if (rows < needed) {
        std::ostringstream os;
        os << "kernel fit at t = " << t << ": " << rows << " weighted points, need " << needed;
        throw InsufficientDataError(os.str());
    }
    // every t_i equals t: the slope is unidentifiable and is dropped
    const Eigen::Index used = (linear && spread <= 1e-12) ? r : cols;

    LocalFit out;
    out.points = rows;
    try {
        const LeastSquares ls(design.topLeftCorner(rows, used));
        out.coefficients = ls.solve(response.head(rows)).head(r);
        if (track) {
            if (tracked < 0) throw DomainError("tracked row carries no kernel weight");
            out.leverage = ls.leverages()[tracked];
        }
    } catch (const RankDeficientError& e) {
        std::ostringstream os;
        os << "kernel fit at t = " << t << ": singular local system (" << e.what() << ")";
        throw SingularMatrixError(os.str());
    }
    return out;
}

Eigen::VectorXd KernelSmoother::coefficients(double t, const KernelConfig& cfg,
                                             std::optional<Eigen::Index> exclude) const {
    return fit_at(t, cfg, exclude).coefficients;
}

double KernelSmoother::self_leverage(Eigen::Index i, const KernelConfig& cfg) const {
    if (i < 0 || i >= data_.n()) throw OutOfRangeError("row index out of range");
    return fit_at(data_.t()[i], cfg, {}, i).leverage;
}

Eigen::VectorXd local_linear_fit(const Dataset& data, const KernelConfig& cfg, double t) {
    return KernelSmoother(data, KernelMethod::local_linear).coefficients(t, cfg);
}

Eigen::VectorXd nadaraya_watson_fit(const Dataset& data, const KernelConfig& cfg, double t) {
    return KernelSmoother(data, KernelMethod::nadaraya_watson).coefficients(t, cfg);
}

KernelFittedValues kernel_fitted_values(const KernelSmoother& smoother, const KernelConfig& cfg,
                                        bool with_trace) {
    const Dataset& data = smoother.data();
    KernelFittedValues out;
    out.fitted = Eigen::VectorXd::Constant(data.n(), std::nan(""));
    out.ok.assign(static_cast<std::size_t>(data.n()), false);
    stats::CompensatedSum trace;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        try {
            const auto local = smoother.fit_at(data.t()[i], cfg, {}, with_trace ? std::optional(i) : std::nullopt);
            out.fitted[i] = data.x().row(i).dot(local.coefficients);
            out.ok[static_cast<std::size_t>(i)] = true;
            trace.add(local.leverage);
        } catch (const InsufficientDataError&) {
            ++out.skipped;
        } catch (const SingularMatrixError&) {
            ++out.skipped;
        }
    }
    out.trace = trace.value();
    return out;
}

BandwidthSelection select_bandwidth_cv(const Dataset& data, KernelMethod method,
                                       std::span<const double> grid, const BandwidthOptions& options) {
    if (grid.empty()) throw DomainError("bandwidth grid is empty");
    if (!(options.max_skip_fraction >= 0.0 && options.max_skip_fraction < 1.0))
        throw DomainError("max_skip_fraction must lie in [0, 1)");
    const KernelSmoother smoother(data, method);
    const Eigen::Index n = data.n();
    const auto allowed = static_cast<Eigen::Index>(std::floor(options.max_skip_fraction * static_cast<double>(n)));

    BandwidthSelection best;
    best.cv_score = std::numeric_limits<double>::infinity();
    bool found = false;
    for (double h : grid) {
        const KernelConfig cfg{options.kernel, h};
        cfg.validate();
        stats::CompensatedSum sse;
        Eigen::Index skipped = 0;
        for (Eigen::Index i = 0; i < n && skipped <= allowed; ++i) {
            try {
                const double e = data.y()[i] - data.x().row(i).dot(smoother.coefficients(data.t()[i], cfg, i));
                sse.add(e * e);
            } catch (const InsufficientDataError&) {
                ++skipped;
            } catch (const SingularMatrixError&) {
                ++skipped;
            }
        }
        if (skipped > allowed || skipped == n) {
            best.scores.push_back(std::nan(""));
            continue;
        }
        const double score = sse.value() / static_cast<double>(n - skipped);
        best.scores.push_back(score);
        const double tol = 1e-12 * std::max(std::abs(score), std::abs(best.cv_score));
        const bool better = !found || score < best.cv_score - tol ||
                            (std::abs(score - best.cv_score) <= tol && h > best.bandwidth);
        if (better) {
            best.bandwidth = h;
            best.cv_score = score;
            best.skipped = skipped;
            found = true;
        }
    }
    if (!found) throw InsufficientDataError("no bandwidth candidate could predict enough left-out points");
    return best;
}

std::vector<double> default_bandwidth_grid(const Dataset& data, int count) {
    if (count < 2) throw DomainError("bandwidth grid needs at least 2 points");
    const Eigen::VectorXd& t = data.t();
    const double mean = t.mean();
    double sd = std::sqrt((t.array() - mean).square().sum() / std::max<double>(1.0, static_cast<double>(t.size() - 1)));
    if (!(sd > 0.0)) sd = 1.0;
    std::vector<double> grid(static_cast<std::size_t>(count));
    const double lo = std::log(0.05 * sd), hi = std::log(2.0 * sd);
    for (int i = 0; i < count; ++i) grid[static_cast<std::size_t>(i)] = std::exp(lo + (hi - lo) * i / (count - 1));
    return grid;
}

} // namespace lagvcm
