#pragma once

#include "lagvcm/baselines.hpp"
#include "lagvcm/basis.hpp"
#include "lagvcm/design.hpp"
#include "lagvcm/estimator.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lagvcm {

enum class TestFunction { beta1, beta2, beta3 };

/// beta1(t) = t^{5/2} e^{-(t-3)}, beta2(t) = t/(t^2+1)^4, beta3(t) = 1/(e^t + e^{2t}).
double test_function(TestFunction id, double t);
TestFunction parse_test_function(std::string_view name);
std::string to_string(TestFunction id);

struct CovariateSpec {
    double mean = 0.0;
    double sd = 1.0;
};

enum class NoiseModel { iid_gaussian, long_memory };

struct NoiseSpec {
    NoiseModel model = NoiseModel::iid_gaussian;
    double alpha = 1.0;  ///< used by long_memory only
};

struct Scenario {
    std::vector<TestFunction> coefficients{TestFunction::beta1, TestFunction::beta2};
    std::size_t n = 400;
    double sigma = 1e-4;
    NoiseSpec noise;
    int replications = 200;
    std::uint64_t seed = 20240101;
    std::vector<CovariateSpec> covariates{{200.0, 20.0}, {45.0, 5.0}};
    double t_mean = 0.25;

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// Fractional Gaussian noise covariance with Hurst index H = 1 - alpha/2:
/// c(k) = (|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H}) / 2. alpha = 1 gives I.
Eigen::MatrixXd long_memory_covariance(Eigen::Index n, double alpha);

/// Maximum length accepted by the dense long-memory generator.
inline constexpr Eigen::Index kMaxLongMemoryLength = 10000;

/// Cholesky-factored fractional Gaussian noise sampler. Each draw has unit
/// marginal variance and Var(sum) = n^{2 - alpha}.
class LongMemoryNoise {
public:
    LongMemoryNoise(Eigen::Index n, double alpha);

    Eigen::Index size() const noexcept { return n_; }
    double alpha() const noexcept { return alpha_; }
    Eigen::VectorXd draw(std::mt19937_64& rng) const;

private:
    Eigen::Index n_;
    double alpha_;
    Eigen::MatrixXd factor_;  ///< lower Cholesky factor; empty when alpha = 1
};

Eigen::VectorXd generate_long_memory_noise(Eigen::Index n, double alpha, std::mt19937_64& rng);

struct SimulatedData {
    Dataset data;
    Eigen::VectorXd noiseless;  ///< sum_l beta_l(t_i) x_li
};

/// t_i ~ Exponential(mean t_mean), x_l ~ N(mean_l, sd_l),
/// y_i = sum_l beta_l(t_i) x_li + sigma eps_i. `noise` must match the
/// scenario when the long-memory model is used; pass nullptr to build it.
SimulatedData generate_dataset(const Scenario& s, std::mt19937_64& rng,
                               const LongMemoryNoise* noise = nullptr);

enum class Method { GL, LL, NW };
std::string to_string(Method m);
Method parse_method(std::string_view name);

struct ExperimentOptions {
    /// Truncation grid for GL; empty means default_truncation_grid.
    std::vector<LevelRange> truncation_grid;
    GridSearch search = GridSearch::automatic;
    /// Design density for GL; empty means Exponential(1 / t_mean).
    std::optional<DesignDensity> density;
    double nu = 0.0;
    /// Bandwidth grid for LL and NW; empty means default_bandwidth_grid.
    std::vector<double> bandwidth_grid;
    BandwidthOptions bandwidth;
    unsigned threads = 0;
};

struct MethodSummary {
    Method method = Method::GL;
    std::vector<double> mean_tuning;  ///< mean M_l per coefficient, or {mean h}
    double mise = 0.0;
    double mise_se = 0.0;
    int replications_used = 0;
    int failures = 0;                 ///< replications where the method threw
    long skipped_points = 0;          ///< kernel fits skipped at training points
};

struct SimulationReport {
    Scenario scenario;
    std::vector<MethodSummary> methods;
};

/// Replicated in-sample MISE ||y^ - f||^2 / n against the noiseless
/// response, with tuning chosen by leave-one-out CV in every replication.
/// Replication b uses the seed derive_seed(scenario.seed, b), so the report
/// does not depend on the thread count.
SimulationReport run_mise_experiment(const Scenario& s, std::span<const Method> methods,
                                     const ExperimentOptions& options = {});

/// Draws from an exponential or uniform design density.
double sample_design(const DesignDensity& h, std::mt19937_64& rng);

/// Synthetic rate study: theta_lk = (k v 1)^{-(gamma+1)} for k < terms,
/// t ~ design, x ~ N(0, 1) independent, iid N(0, sigma^2) errors, and M set
/// by the theoretical rule for each n. The error is the exact integrated
/// squared error sum_l ||beta^_l - beta_l||^2 in L2(h).
struct RateStudy {
    DesignDensity design = DesignDensity::exponential(0.1);
    std::vector<std::size_t> sizes{250, 500, 1000, 2000, 4000};
    std::size_t r = 2;
    double gamma = 0.5;
    int terms = 200;
    double sigma = 1.0;
    SmoothnessSpec rule{{1.0, 1.0}, {1.0, 1.0}, 1.0};
    int replications = 100;
    std::uint64_t seed = 7;
    unsigned threads = 0;
};

struct RatePoint {
    std::size_t n = 0;
    TruncationPlan plan;
    double mise = 0.0;
    double mise_se = 0.0;
};

std::vector<RatePoint> run_rate_study(const RateStudy& study);

struct RateFit {
    double slope = 0.0;
    double slope_se = 0.0;
    double intercept = 0.0;
};

/// OLS of log MISE on log n. Needs at least 3 points with distinct n and
/// positive MISE.
RateFit rate_regression(std::span<const std::pair<double, double>> points);

} // namespace lagvcm
