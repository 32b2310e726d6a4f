#include "lagvcm/inference.hpp"
#include "lagvcm/error.hpp"
#include "lagvcm/parallel.hpp"
#include "lagvcm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace lagvcm {

namespace {

void require_level(double level) {
    if (!(level > 0.0 && level < 1.0)) {
        std::ostringstream os;
        os << "significance level must lie in (0, 1), got " << level;
        throw DomainError(os.str());
    }
}

double upper_tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

} // namespace

Eigen::MatrixXd estimate_gamma(const Dataset& data, std::size_t l, int M, const DesignDensity& h,
                               double nu) {
    if (static_cast<Eigen::Index>(l) >= data.r()) throw OutOfRangeError("coefficient index out of range");
    if (M < 1) throw DomainError("estimate_gamma: M must be >= 1");
    if (data.n() < M) throw DimensionError("estimate_gamma: need n >= M");
    Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(M, M);
    const auto col = static_cast<Eigen::Index>(l);
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        const Eigen::VectorXd v = weighted_basis_vector(data.t()[i], M, h, nu);
        const double x = data.x()(i, col);
        gamma.selfadjointView<Eigen::Lower>().rankUpdate(v, x * x);
    }
    gamma = gamma.selfadjointView<Eigen::Lower>();
    gamma /= static_cast<double>(data.n());
    const Eigen::VectorXd eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gamma, Eigen::EigenvaluesOnly).eigenvalues();
    if (!(eig[0] > 1e-12 * eig[M - 1])) {
        std::ostringstream os;
        os << "estimated Gamma for coefficient " << l << " is not positive definite (eigenvalues "
           << eig[0] << " .. " << eig[M - 1] << ")";
        throw SingularMatrixError(os.str());
    }
    return gamma;
}

VarianceModel::VarianceModel(double alpha, double pi_alpha, Eigen::MatrixXd gamma)
    : alpha_(alpha), pi_alpha_(pi_alpha), gamma_(std::move(gamma)) {
    if (!(alpha_ > 0.0 && alpha_ <= 1.0)) throw DomainError("long-memory alpha must lie in (0, 1]");
    if (!(pi_alpha_ > 0.0) || !std::isfinite(pi_alpha_))
        throw DomainError("long-memory constant pi_alpha must be positive");
    if (gamma_.rows() < 1 || gamma_.rows() != gamma_.cols())
        throw DimensionError("Gamma must be a non-empty square matrix");
    const double scale = std::max(1.0, gamma_.cwiseAbs().maxCoeff());
    if ((gamma_ - gamma_.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw SingularMatrixError("Gamma is not symmetric");
    factor_.compute(gamma_);
    if (factor_.info() != Eigen::Success) throw SingularMatrixError("Gamma is not positive definite");
}

double VarianceModel::quadratic_form(const Eigen::VectorXd& v) const {
    if (v.size() != gamma_.rows()) throw DimensionError("basis vector does not match Gamma");
    return v.dot(factor_.solve(v));
}

VarianceModel make_variance_model(const Dataset& data, const FittedVCM& fit, std::size_t l,
                                  double alpha, std::optional<double> pi_alpha) {
    if (l >= fit.r()) throw OutOfRangeError("coefficient index out of range");
    double pi = 0.0;
    if (pi_alpha) {
        pi = *pi_alpha;
    } else if (alpha == 1.0) {
        pi = fit.residual_variance();
    } else {
        throw DomainError("pi_alpha must be supplied when alpha < 1");
    }
    return VarianceModel(alpha, pi,
                         estimate_gamma(data, l, fit.plan().level(l), fit.density(), fit.nu()));
}

double asymptotic_variance(const FittedVCM& fit, std::size_t l, double t, const VarianceModel& model) {
    if (l >= fit.r()) throw OutOfRangeError("coefficient index out of range");
    const Eigen::VectorXd v = weighted_basis_vector(t, fit.plan().level(l), fit.density(), fit.nu());
    return model.pi_alpha() * model.quadratic_form(v);
}

ConfidenceInterval confidence_interval(const FittedVCM& fit, std::size_t l, double t, double level,
                                       const VarianceModel& model) {
    require_level(level);
    const double estimate = fit.coefficient(l, t);
    const double sigma = std::sqrt(asymptotic_variance(fit, l, t, model));
    const double z = stats::normal_quantile(1.0 - level / 2.0);
    const double half = z * std::pow(static_cast<double>(fit.n()), -model.alpha() / 2.0) * sigma;
    return ConfidenceInterval{estimate, estimate - half, estimate + half};
}

TestResult pointwise_test(const FittedVCM& fit, std::size_t l, double t0, double beta0, double level,
                          const VarianceModel& model) {
    require_level(level);
    const double sigma = std::sqrt(asymptotic_variance(fit, l, t0, model));
    if (!(sigma > 0.0)) throw DomainError("pointwise test: asymptotic variance is zero");
    const double scale = std::sqrt(std::pow(static_cast<double>(fit.n()), model.alpha()));
    const double statistic = scale * (fit.coefficient(l, t0) - beta0) / sigma;
    const double critical = stats::normal_quantile(1.0 - level / 2.0);
    TestResult result;
    result.statistic = statistic;
    result.p_value = std::min(1.0, 2.0 * upper_tail(std::abs(statistic)));
    result.reject = std::abs(statistic) > critical;
    result.level = level;
    return result;
}

double asymptotic_power(double delta, double sigma, double level) {
    require_level(level);
    if (!(sigma > 0.0)) throw DomainError("asymptotic_power: sigma must be positive");
    const double z = stats::normal_quantile(1.0 - level / 2.0);
    const double shift = delta / sigma;
    // At delta = 0 the power is the size of the test; return it exactly
    // rather than through two rounded tail evaluations.
    if (shift == 0.0) return level;
    // 1 - Phi(z - s) + Phi(-z - s), both terms written as upper tails.
    return std::min(1.0, upper_tail(z - shift) + upper_tail(z + shift));
}

CoefficientBands bootstrap_bands(const Dataset& data, const TruncationPlan& plan,
                                 const DesignDensity& h, double nu, int B, double level,
                                 std::span<const double> t_grid, std::uint64_t seed,
                                 unsigned threads) {
    if (B < 100) throw DomainError("bootstrap_bands: B must be >= 100");
    require_level(level);
    if (t_grid.empty()) throw DomainError("bootstrap_bands: empty evaluation grid");

    const auto r = static_cast<Eigen::Index>(plan.size());
    const auto grid_size = static_cast<Eigen::Index>(t_grid.size());
    const FittedVCM central = fit(data, plan, h, nu);

    CoefficientBands bands;
    bands.t_grid.assign(t_grid.begin(), t_grid.end());
    bands.estimate.resize(r, grid_size);
    for (Eigen::Index g = 0; g < grid_size; ++g) bands.estimate.col(g) = central.coefficients(t_grid[static_cast<std::size_t>(g)]);

    // replicate b occupies rows [b*r, (b+1)*r)
    Eigen::MatrixXd draws(static_cast<Eigen::Index>(B) * r, grid_size);
    const Eigen::Index n = data.n();
    parallel_for(static_cast<std::size_t>(B), [&](std::size_t b) {
        constexpr int kAttempts = 10;
        for (int attempt = 0; attempt < kAttempts; ++attempt) {
            std::mt19937_64 rng(stats::derive_seed(stats::derive_seed(seed, b), static_cast<std::uint64_t>(attempt)));
            std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
            std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
            for (auto& row : rows) row = pick(rng);
            try {
                const FittedVCM f = fit(data.subset(rows), plan, h, nu);
                for (Eigen::Index g = 0; g < grid_size; ++g) {
                    draws.block(static_cast<Eigen::Index>(b) * r, g, r, 1) =
                        f.coefficients(t_grid[static_cast<std::size_t>(g)]);
                }
                return;
            } catch (const RankDeficientError&) {
                if (attempt + 1 == kAttempts) throw;
            }
        }
    }, threads);

    bands.lower.resize(r, grid_size);
    bands.upper.resize(r, grid_size);
    std::vector<double> column(static_cast<std::size_t>(B));
    for (Eigen::Index l = 0; l < r; ++l) {
        for (Eigen::Index g = 0; g < grid_size; ++g) {
            for (int b = 0; b < B; ++b) column[static_cast<std::size_t>(b)] = draws(b * r + l, g);
            std::sort(column.begin(), column.end());
            bands.lower(l, g) = stats::quantile_sorted(column, level / 2.0);
            bands.upper(l, g) = stats::quantile_sorted(column, 1.0 - level / 2.0);
        }
    }
    return bands;
}

} // namespace lagvcm
