#include "lagvcm/simulation.hpp"
#include "lagvcm/error.hpp"
#include "lagvcm/parallel.hpp"
#include "lagvcm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace lagvcm {

double test_function(TestFunction id, double t) {
    if (!(t >= 0.0)) throw DomainError("test functions are defined for t >= 0");
    switch (id) {
    case TestFunction::beta1:
        return t == 0.0 ? 0.0 : std::exp(2.5 * std::log(t) - (t - 3.0));
    case TestFunction::beta2:
        return t / std::pow(t * t + 1.0, 4);
    case TestFunction::beta3:
        return 1.0 / (std::exp(t) + std::exp(2.0 * t));
    }
    return 0.0;
}

TestFunction parse_test_function(std::string_view name) {
    if (name == "beta1") return TestFunction::beta1;
    if (name == "beta2") return TestFunction::beta2;
    if (name == "beta3") return TestFunction::beta3;
    throw ConfigError("unknown test function '" + std::string(name) + "' (expected beta1, beta2 or beta3)");
}

std::string to_string(TestFunction id) {
    switch (id) {
    case TestFunction::beta1: return "beta1";
    case TestFunction::beta2: return "beta2";
    case TestFunction::beta3: return "beta3";
    }
    return "?";
}

void Scenario::validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
        throw ConfigError("scenario field '" + field + "': " + why);
    };
    if (coefficients.size() != 2) fail("coefficients", "exactly two test functions are required");
    if (covariates.size() != coefficients.size()) fail("covariates", "one (mean, sd) pair per coefficient is required");
    for (const auto& c : covariates)
        if (!std::isfinite(c.mean) || !(c.sd >= 0.0) || !std::isfinite(c.sd)) fail("covariates", "sd must be >= 0 and finite");
    if (n < 50) fail("n", "must be >= 50");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) fail("sigma", "must be >= 0");
    if (replications < 1) fail("replications", "must be >= 1");
    if (!(t_mean > 0.0) || !std::isfinite(t_mean)) fail("t_mean", "must be positive");
    if (noise.model == NoiseModel::long_memory) {
        if (!(noise.alpha > 0.0 && noise.alpha <= 1.0)) fail("noise.alpha", "must lie in (0, 1]");
        if (n > static_cast<std::size_t>(kMaxLongMemoryLength)) fail("n", "long-memory noise supports n <= 10000");
    }
}

Eigen::MatrixXd long_memory_covariance(Eigen::Index n, double alpha) {
    if (n < 1) throw DomainError("long_memory_covariance: n must be >= 1");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("long-memory alpha must lie in (0, 1]");
    const double two_h = 2.0 - alpha;
    Eigen::VectorXd c(n);
    c[0] = 1.0;
    for (Eigen::Index k = 1; k < n; ++k) {
        const auto kd = static_cast<double>(k);
        c[k] = 0.5 * (std::pow(kd + 1.0, two_h) - 2.0 * std::pow(kd, two_h) + std::pow(kd - 1.0, two_h));
    }
    Eigen::MatrixXd cov(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) cov(i, j) = c[std::abs(i - j)];
    return cov;
}

LongMemoryNoise::LongMemoryNoise(Eigen::Index n, double alpha) : n_(n), alpha_(alpha) {
    if (n < 1) throw DomainError("long-memory noise: n must be >= 1");
    if (n > kMaxLongMemoryLength) {
        std::ostringstream os;
        os << "long-memory noise: n = " << n << " exceeds the dense factorization cap " << kMaxLongMemoryLength;
        throw OutOfRangeError(os.str());
    }
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("long-memory alpha must lie in (0, 1]");
    if (alpha == 1.0) return;
    Eigen::LLT<Eigen::MatrixXd> llt(long_memory_covariance(n, alpha));
    if (llt.info() != Eigen::Success) throw SingularMatrixError("fractional Gaussian noise covariance is not positive definite");
    factor_ = llt.matrixL();
}

Eigen::VectorXd LongMemoryNoise::draw(std::mt19937_64& rng) const {
    std::normal_distribution<double> z;
    Eigen::VectorXd e(n_);
    for (Eigen::Index i = 0; i < n_; ++i) e[i] = z(rng);
    if (factor_.size() == 0) return e;
    return factor_.triangularView<Eigen::Lower>() * e;
}

Eigen::VectorXd generate_long_memory_noise(Eigen::Index n, double alpha, std::mt19937_64& rng) {
    return LongMemoryNoise(n, alpha).draw(rng);
}

SimulatedData generate_dataset(const Scenario& s, std::mt19937_64& rng, const LongMemoryNoise* noise) {
    s.validate();
    const auto n = static_cast<Eigen::Index>(s.n);
    const auto r = static_cast<Eigen::Index>(s.coefficients.size());
    std::exponential_distribution<double> expo(1.0 / s.t_mean);
    std::normal_distribution<double> z;

    Eigen::VectorXd t(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double v = 0.0;
        while (!(v > 0.0)) v = expo(rng);
        t[i] = v;
    }
    Eigen::MatrixXd x(n, r);
    for (Eigen::Index l = 0; l < r; ++l) {
        const auto& c = s.covariates[static_cast<std::size_t>(l)];
        for (Eigen::Index i = 0; i < n; ++i) x(i, l) = c.mean + c.sd * z(rng);
    }
    Eigen::VectorXd f(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double sum = 0.0;
        for (Eigen::Index l = 0; l < r; ++l) sum += test_function(s.coefficients[static_cast<std::size_t>(l)], t[i]) * x(i, l);
        f[i] = sum;
    }
    Eigen::VectorXd eps;
    if (s.noise.model == NoiseModel::long_memory) {
        if (noise) {
            if (noise->size() != n || noise->alpha() != s.noise.alpha)
                throw DimensionError("long-memory sampler does not match the scenario");
            eps = noise->draw(rng);
        } else {
            eps = LongMemoryNoise(n, s.noise.alpha).draw(rng);
        }
    } else {
        eps.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) eps[i] = z(rng);
    }
    Eigen::VectorXd y = f + s.sigma * eps;
    return SimulatedData{Dataset(std::move(t), std::move(x), std::move(y)), std::move(f)};
}

std::string to_string(Method m) {
    switch (m) {
    case Method::GL: return "GL";
    case Method::LL: return "LL";
    case Method::NW: return "NW";
    }
    return "?";
}

Method parse_method(std::string_view name) {
    if (name == "GL") return Method::GL;
    if (name == "LL") return Method::LL;
    if (name == "NW") return Method::NW;
    throw ConfigError("unknown method '" + std::string(name) + "' (expected GL, LL or NW)");
}

namespace {

struct Outcome {
    bool ok = false;
    double mise = 0.0;
    std::vector<double> tuning;
    long skipped = 0;
    std::string message;
};

Outcome run_gl(const SimulatedData& sim, const Scenario& s, const ExperimentOptions& options) {
    const Dataset& data = sim.data;
    const auto grid = options.truncation_grid.empty()
                          ? default_truncation_grid(static_cast<std::size_t>(data.n()), static_cast<std::size_t>(data.r()))
                          : options.truncation_grid;
    const DesignDensity h = options.density ? *options.density : DesignDensity::exponential(1.0 / s.t_mean);
    const TruncationSelection sel = select_truncation_loocv(data, grid, h, options.nu, options.search);
    const FittedVCM f = fit(data, sel.plan, h, options.nu);
    const Eigen::VectorXd fitted = data.y() - f.residuals();
    Outcome out;
    out.ok = true;
    out.mise = (fitted - sim.noiseless).squaredNorm() / static_cast<double>(data.n());
    for (int m : sel.plan.levels()) out.tuning.push_back(m);
    return out;
}

Outcome run_kernel(const SimulatedData& sim, KernelMethod method, const ExperimentOptions& options) {
    const Dataset& data = sim.data;
    const auto grid = options.bandwidth_grid.empty() ? default_bandwidth_grid(data) : options.bandwidth_grid;
    const BandwidthSelection sel = select_bandwidth_cv(data, method, grid, options.bandwidth);
    const KernelSmoother smoother(data, method);
    const KernelFittedValues fv = kernel_fitted_values(smoother, {options.bandwidth.kernel, sel.bandwidth});
    const Eigen::Index used = data.n() - fv.skipped;
    if (used == 0) throw InsufficientDataError("no training point could be fitted");
    stats::CompensatedSum sse;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        if (!fv.ok[static_cast<std::size_t>(i)]) continue;
        const double e = fv.fitted[i] - sim.noiseless[i];
        sse.add(e * e);
    }
    Outcome out;
    out.ok = true;
    out.mise = sse.value() / static_cast<double>(used);
    out.tuning = {sel.bandwidth};
    out.skipped = static_cast<long>(fv.skipped);
    return out;
}

} // namespace

SimulationReport run_mise_experiment(const Scenario& s, std::span<const Method> methods,
                                     const ExperimentOptions& options) {
    s.validate();
    if (methods.empty()) throw ConfigError("scenario field 'methods': at least one method is required");
    std::optional<LongMemoryNoise> noise;
    if (s.noise.model == NoiseModel::long_memory) noise.emplace(static_cast<Eigen::Index>(s.n), s.noise.alpha);

    const auto reps = static_cast<std::size_t>(s.replications);
    std::vector<std::vector<Outcome>> outcomes(reps, std::vector<Outcome>(methods.size()));
    parallel_for(reps, [&](std::size_t b) {
        std::mt19937_64 rng(stats::derive_seed(s.seed, b));
        const SimulatedData sim = generate_dataset(s, rng, noise ? &*noise : nullptr);
        for (std::size_t m = 0; m < methods.size(); ++m) {
            try {
                switch (methods[m]) {
                case Method::GL: outcomes[b][m] = run_gl(sim, s, options); break;
                case Method::LL: outcomes[b][m] = run_kernel(sim, KernelMethod::local_linear, options); break;
                case Method::NW: outcomes[b][m] = run_kernel(sim, KernelMethod::nadaraya_watson, options); break;
                }
            } catch (const Error& e) {
                outcomes[b][m].message = e.what();
            }
        }
    }, options.threads);

    SimulationReport report;
    report.scenario = s;
    for (std::size_t m = 0; m < methods.size(); ++m) {
        MethodSummary summary;
        summary.method = methods[m];
        stats::CompensatedSum sum, sum_sq;
        std::vector<stats::CompensatedSum> tuning;
        std::string first_error;
        for (std::size_t b = 0; b < reps; ++b) {
            const Outcome& o = outcomes[b][m];
            if (!o.ok) {
                ++summary.failures;
                if (first_error.empty()) first_error = o.message;
                continue;
            }
            ++summary.replications_used;
            sum.add(o.mise);
            sum_sq.add(o.mise * o.mise);
            tuning.resize(o.tuning.size());
            for (std::size_t k = 0; k < o.tuning.size(); ++k) tuning[k].add(o.tuning[k]);
            summary.skipped_points += o.skipped;
        }
        if (summary.replications_used == 0) {
            throw Error(to_string(methods[m]) + " failed in every replication: " + first_error);
        }
        const double count = summary.replications_used;
        summary.mise = sum.value() / count;
        if (summary.replications_used > 1) {
            const double var = std::max(0.0, (sum_sq.value() - count * summary.mise * summary.mise) / (count - 1.0));
            summary.mise_se = std::sqrt(var / count);
        }
        for (const auto& t : tuning) summary.mean_tuning.push_back(t.value() / count);
        report.methods.push_back(std::move(summary));
    }
    return report;
}

double sample_design(const DesignDensity& h, std::mt19937_64& rng) {
    double v = 0.0;
    switch (h.family()) {
    case DesignDensity::Family::exponential: {
        std::exponential_distribution<double> expo(h.rate());
        while (!(v > 0.0)) v = expo(rng);
        return v;
    }
    case DesignDensity::Family::uniform: {
        std::uniform_real_distribution<double> u(h.lower(), h.upper());
        while (!(v > 0.0)) v = u(rng);
        return v;
    }
    default:
        throw DomainError("sample_design supports exponential and uniform densities only");
    }
}

std::vector<RatePoint> run_rate_study(const RateStudy& study) {
    if (study.sizes.empty()) throw DomainError("rate study needs at least one sample size");
    if (study.r < 1) throw DomainError("rate study needs r >= 1");
    if (study.terms < 1) throw DomainError("rate study needs at least one true term");
    if (study.replications < 1) throw DomainError("rate study needs at least one replication");
    if (study.rule.gamma.size() != study.r) throw DimensionError("smoothness rule must have one entry per coefficient");
    if (!(study.sigma >= 0.0)) throw DomainError("sigma must be >= 0");

    const auto r = static_cast<Eigen::Index>(study.r);
    const int K = study.terms;
    const DesignDensity& h = study.design;
    Eigen::VectorXd theta(K);
    for (int k = 0; k < K; ++k) theta[k] = std::pow(std::max(k, 1), -(study.gamma + 1.0));

    std::vector<RatePoint> points;
    for (std::size_t s = 0; s < study.sizes.size(); ++s) {
        const std::size_t n_size = study.sizes[s];
        const auto n = static_cast<Eigen::Index>(n_size);
        const TruncationPlan plan = theoretical_truncation(study.rule, n_size);
        std::vector<double> errors(static_cast<std::size_t>(study.replications));
        parallel_for(errors.size(), [&](std::size_t b) {
            std::mt19937_64 rng(stats::derive_seed(stats::derive_seed(study.seed, s), b));
            std::normal_distribution<double> z;
            Eigen::VectorXd t(n), y(n);
            Eigen::MatrixXd x(n, r);
            for (Eigen::Index i = 0; i < n; ++i) {
                t[i] = sample_design(h, rng);
                for (Eigen::Index l = 0; l < r; ++l) x(i, l) = z(rng);
            }
            for (Eigen::Index i = 0; i < n; ++i) {
                const double beta = weighted_basis_vector(t[i], K, h, 0.0).dot(theta);
                y[i] = beta * x.row(i).sum() + study.sigma * z(rng);
            }
            const FittedVCM f = fit(Dataset(t, x, y), plan, h, 0.0);
            double err = 0.0;
            for (std::size_t l = 0; l < study.r; ++l) {
                const int M = plan.level(l);
                const int shared = std::min(M, K);
                err += (f.theta().block(l).head(shared) - theta.head(shared)).squaredNorm() +
                       f.theta().block(l).tail(M - shared).squaredNorm() + theta.tail(K - shared).squaredNorm();
            }
            errors[b] = err;
        }, study.threads);

        stats::CompensatedSum sum, sum_sq;
        for (double e : errors) {
            sum.add(e);
            sum_sq.add(e * e);
        }
        const double count = static_cast<double>(errors.size());
        RatePoint p;
        p.n = n_size;
        p.plan = plan;
        p.mise = sum.value() / count;
        if (errors.size() > 1) {
            const double var = std::max(0.0, (sum_sq.value() - count * p.mise * p.mise) / (count - 1.0));
            p.mise_se = std::sqrt(var / count);
        }
        points.push_back(std::move(p));
    }
    return points;
}

RateFit rate_regression(std::span<const std::pair<double, double>> points) {
    if (points.size() < 3) throw DomainError("rate regression needs at least 3 points");
    std::set<double> sizes;
    for (const auto& [n, mise] : points) {
        if (!(n > 0.0) || !(mise > 0.0) || !std::isfinite(n) || !std::isfinite(mise))
            throw DomainError("rate regression needs positive finite n and MISE");
        sizes.insert(n);
    }
    if (sizes.size() != points.size()) throw DomainError("rate regression needs distinct n");
    const auto m = static_cast<double>(points.size());
    double mx = 0.0, my = 0.0;
    for (const auto& [n, mise] : points) {
        mx += std::log(n);
        my += std::log(mise);
    }
    mx /= m;
    my /= m;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [n, mise] : points) {
        const double dx = std::log(n) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(mise) - my);
    }
    RateFit out;
    out.slope = sxy / sxx;
    out.intercept = my - out.slope * mx;
    double rss = 0.0;
    for (const auto& [n, mise] : points) {
        const double e = std::log(mise) - out.intercept - out.slope * std::log(n);
        rss += e * e;
    }
    out.slope_se = std::sqrt(rss / (m - 2.0) / sxx);
    return out;
}

} // namespace lagvcm
