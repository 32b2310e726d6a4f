#include "lagvcm/estimator.hpp"
#include "lagvcm/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

namespace lagvcm {

FittedVCM::FittedVCM(CoefficientVector theta, DesignDensity density, double nu, Eigen::Index n,
                     Eigen::VectorXd residuals)
    : theta_(std::move(theta)),
      density_(std::move(density)),
      nu_(nu),
      n_(n),
      residuals_(std::move(residuals)) {}

double FittedVCM::residual_variance() const {
    const double rss = residuals_.squaredNorm();
    const auto dof = static_cast<double>(n_ - plan().total());
    return dof > 0.0 ? rss / dof : rss / static_cast<double>(n_);
}

double FittedVCM::coefficient(std::size_t l, double t) const {
    if (l >= r()) throw OutOfRangeError("coefficient index out of range");
    const int m = plan().level(l);
    return weighted_basis_vector(t, m, density_, nu_).dot(theta_.block(l));
}

Eigen::VectorXd FittedVCM::coefficients(double t) const {
    const auto& levels = plan().levels();
    const int max_level = *std::max_element(levels.begin(), levels.end());
    const Eigen::VectorXd basis = weighted_basis_vector(t, max_level, density_, nu_);
    Eigen::VectorXd out(static_cast<Eigen::Index>(r()));
    for (std::size_t l = 0; l < r(); ++l) {
        out[static_cast<Eigen::Index>(l)] = basis.head(levels[l]).dot(theta_.block(l));
    }
    return out;
}

double FittedVCM::predict(double t, std::span<const double> x) const {
    if (x.size() != r()) {
        std::ostringstream os;
        os << "predict: expected " << r() << " covariates, got " << x.size();
        throw DimensionError(os.str());
    }
    const Eigen::VectorXd beta = coefficients(t);
    double sum = 0.0;
    for (std::size_t l = 0; l < x.size(); ++l) sum += beta[static_cast<Eigen::Index>(l)] * x[l];
    return sum;
}

FittedVCM fit(const Dataset& data, const TruncationPlan& plan, const DesignDensity& h, double nu) {
    const Eigen::MatrixXd design = assemble_design(data, plan, h, nu);
    const LeastSquares ls(design);
    Eigen::VectorXd theta = ls.solve(data.y());
    Eigen::VectorXd residuals = data.y() - design * theta;
    return FittedVCM(CoefficientVector(std::move(theta), plan), h, nu, data.n(),
                     std::move(residuals));
}

double evaluate_coefficient(const FittedVCM& fit, std::size_t l, double t) {
    return fit.coefficient(l, t);
}

Eigen::VectorXd evaluate_coefficient_vector(const FittedVCM& fit, double t) {
    return fit.coefficients(t);
}

double predict(const FittedVCM& fit, double t, std::span<const double> x) {
    return fit.predict(t, x);
}

// ---------------------------------------------------------------------------

void SmoothnessSpec::validate() const {
    if (gamma.empty() || gamma.size() != radius.size())
        throw DomainError("smoothness spec: gamma and radius must be non-empty and equally long");
    for (double g : gamma) {
        if (!(g > 0.0)) throw DomainError("smoothness spec: gamma must be positive");
    }
    for (double a : radius) {
        if (!(a > 0.0)) throw DomainError("smoothness spec: radius must be positive");
    }
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("smoothness spec: alpha must be in (0, 1]");
}

TruncationPlan theoretical_truncation(const SmoothnessSpec& spec, std::size_t n) {
    spec.validate();
    if (n < 2) throw DomainError("theoretical_truncation: n must be >= 2");
    std::vector<int> levels;
    levels.reserve(spec.gamma.size());
    const double log_n = std::log(static_cast<double>(n));
    for (std::size_t l = 0; l < spec.gamma.size(); ++l) {
        const double log_m =
            (2.0 * std::log(spec.radius[l]) + spec.alpha * log_n) / (2.0 * spec.gamma[l] + 1.0);
        // Nudge before flooring so exact powers such as 1024^(1/5) land on 4.
        const double m = std::floor(std::exp(log_m) + 0.5 + 1e-12);
        levels.push_back(static_cast<int>(std::max(1.0, std::min(m, 1e9))));
    }
    return TruncationPlan(std::move(levels));
}

std::vector<LevelRange> default_truncation_grid(std::size_t n, std::size_t r) {
    if (r == 0) throw DomainError("default_truncation_grid: r must be positive");
    const int hi = static_cast<int>(std::max<std::size_t>(1, std::min<std::size_t>(12, n / (4 * r))));
    return std::vector<LevelRange>(r, LevelRange{1, hi});
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double leverage_loocv(const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
    const LeastSquares ls(design);
    const Eigen::VectorXd theta = ls.solve(y);
    const Eigen::VectorXd residuals = y - design * theta;
    const Eigen::VectorXd lev = ls.leverages();
    double sum = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double denom = 1.0 - lev[i];
        if (!(denom > 1e-12)) return kInf;
        const double loo = residuals[i] / denom;
        sum += loo * loo;
    }
    return sum / static_cast<double>(y.size());
}

/// Caches the weighted basis at the data points so candidate designs are
/// assembled by column products only.
class CandidateEvaluator {
public:
    CandidateEvaluator(const Dataset& data, int max_level, const DesignDensity& h, double nu)
        : data_(data), basis_(data.n(), max_level) {
        for (Eigen::Index i = 0; i < data.n(); ++i) {
            basis_.row(i) = weighted_basis_vector(data.t()[i], max_level, h, nu).transpose();
        }
    }

    /// Score of a plan, or nullopt when the plan cannot be fitted.
    std::optional<double> score(const std::vector<int>& levels) {
        if (auto it = memo_.find(levels); it != memo_.end()) return it->second;
        std::optional<double> result;
        const TruncationPlan plan(levels);
        if (plan.total() < data_.n()) {
            Eigen::MatrixXd design(data_.n(), plan.total());
            Eigen::Index col = 0;
            for (std::size_t l = 0; l < levels.size(); ++l) {
                const auto xl = data_.x().col(static_cast<Eigen::Index>(l));
                for (int k = 0; k < levels[l]; ++k) {
                    design.col(col++) = basis_.col(k).cwiseProduct(xl);
                }
            }
            try {
                const double s = leverage_loocv(design, data_.y());
                if (std::isfinite(s)) result = s;
            } catch (const RankDeficientError&) {
            }
        }
        memo_.emplace(levels, result);
        return result;
    }

    std::size_t evaluated() const noexcept { return memo_.size(); }

private:
    const Dataset& data_;
    Eigen::MatrixXd basis_;
    std::map<std::vector<int>, std::optional<double>> memo_;
};

struct Candidate {
    std::vector<int> levels;
    double score = kInf;
};

int total_of(const std::vector<int>& levels) {
    int s = 0;
    for (int m : levels) s += m;
    return s;
}

bool better(const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score < b.score;
    const int ta = total_of(a.levels);
    const int tb = total_of(b.levels);
    if (ta != tb) return ta < tb;
    return a.levels < b.levels;
}

void consider(CandidateEvaluator& eval, const std::vector<int>& levels, Candidate& best) {
    if (auto s = eval.score(levels)) {
        Candidate c{levels, *s};
        if (best.levels.empty() || better(c, best)) best = std::move(c);
    }
}

void cartesian_search(CandidateEvaluator& eval, std::span<const LevelRange> grid, Candidate& best) {
    std::vector<int> levels(grid.size());
    for (std::size_t l = 0; l < grid.size(); ++l) levels[l] = grid[l].lo;
    while (true) {
        consider(eval, levels, best);
        std::size_t l = grid.size();
        while (l > 0) {
            --l;
            if (levels[l] < grid[l].hi) {
                ++levels[l];
                break;
            }
            levels[l] = grid[l].lo;
            if (l == 0) return;
        }
    }
}

Candidate coordinate_descent(CandidateEvaluator& eval, std::span<const LevelRange> grid,
                             std::vector<int> start) {
    Candidate best;
    consider(eval, start, best);
    if (best.levels.empty()) best.levels = start;
    constexpr int kMaxSweeps = 25;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        bool changed = false;
        for (std::size_t l = 0; l < grid.size(); ++l) {
            for (int m = grid[l].lo; m <= grid[l].hi; ++m) {
                std::vector<int> trial = best.levels;
                trial[l] = m;
                const Candidate before = best;
                consider(eval, trial, best);
                if (best.levels != before.levels) changed = true;
            }
        }
        if (!changed) break;
    }
    return best;
}

} // namespace

double loocv_score(const Dataset& data, const TruncationPlan& plan, const DesignDensity& h,
                   double nu) {
    return leverage_loocv(assemble_design(data, plan, h, nu), data.y());
}

TruncationSelection select_truncation_loocv(const Dataset& data, std::span<const LevelRange> grid,
                                            const DesignDensity& h, double nu, GridSearch search) {
    if (grid.empty()) throw DomainError("truncation grid is empty");
    if (static_cast<Eigen::Index>(grid.size()) != data.r())
        throw DimensionError("truncation grid size does not match the number of covariates");
    int max_level = 1;
    for (const auto& range : grid) {
        if (range.lo < 1 || range.hi < range.lo) throw DomainError("truncation grid range is empty");
        max_level = std::max(max_level, range.hi);
    }

    CandidateEvaluator eval(data, max_level, h, nu);
    Candidate best;
    const bool use_cartesian = search == GridSearch::cartesian ||
                               (search == GridSearch::automatic && grid.size() <= 2);
    if (use_cartesian) {
        cartesian_search(eval, grid, best);
    } else {
        // Sweeps from the lower corner, then restarts from the upper corner and the midpoint.
        std::vector<std::vector<int>> starts(3, std::vector<int>(grid.size()));
        for (std::size_t l = 0; l < grid.size(); ++l) {
            starts[0][l] = grid[l].lo;
            starts[1][l] = grid[l].hi;
            starts[2][l] = (grid[l].lo + grid[l].hi) / 2;
        }
        for (const auto& start : starts) {
            Candidate c = coordinate_descent(eval, grid, start);
            if (std::isfinite(c.score) && (best.levels.empty() || better(c, best))) best = c;
        }
    }
    if (best.levels.empty() || !std::isfinite(best.score)) {
        throw RankDeficientError("no truncation candidate could be fitted (all rank deficient)");
    }
    return TruncationSelection{TruncationPlan(best.levels), best.score, eval.evaluated()};
}

} // namespace lagvcm
