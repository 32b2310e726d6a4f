#include "lagvcm/cli/commands.hpp"

#include "lagvcm/baselines.hpp"
#include "lagvcm/error.hpp"
#include "lagvcm/simulation.hpp"
#include "lagvcm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

namespace lagvcm::cli {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Json matrix_json(const Eigen::MatrixXd& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

Eigen::MatrixXd matrix_from(const Json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) throw ConfigError("model field '" + field + "': expected a matrix");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (static_cast<Eigen::Index>(j[i].size()) != cols) throw ConfigError("model field '" + field + "': ragged matrix");
        for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
    }
    return m;
}

Eigen::VectorXd vector_from(const Json& j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j[i].get<double>();
    return v;
}

Json density_to_json(const DesignDensity& h) {
    Json d{{"family", to_string(h.family())}, {"floor", h.floor()}};
    switch (h.family()) {
    case DesignDensity::Family::exponential: d["rate"] = h.rate(); break;
    case DesignDensity::Family::uniform:
        d["lower"] = h.lower();
        d["upper"] = h.upper();
        break;
    case DesignDensity::Family::empirical:
        d["bandwidth"] = h.bandwidth();
        d["sample"] = h.sample();
        break;
    }
    return d;
}

DesignDensity density_from_json(const Json& d) {
    const std::string family = d.at("family").get<std::string>();
    const double floor = d.at("floor").get<double>();
    if (family == "exponential") return DesignDensity::exponential(d.at("rate").get<double>(), floor);
    if (family == "uniform") return DesignDensity::uniform(d.at("lower").get<double>(), d.at("upper").get<double>(), floor);
    if (family == "empirical") {
        const auto sample = d.at("sample").get<std::vector<double>>();
        return DesignDensity::empirical(sample, floor, d.at("bandwidth").get<double>());
    }
    throw ConfigError("model field 'density.family': unknown family '" + family + "'");
}

std::string plan_label(const TruncationPlan& plan) {
    std::string s;
    for (std::size_t l = 0; l < plan.size(); ++l) s += (l ? ";" : "") + std::to_string(plan.level(l));
    return s;
}

/// Deterministic Fisher-Yates permutation of 0..n-1.
std::vector<Eigen::Index> permutation(Eigen::Index n, std::uint64_t seed) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng() % i]);
    return idx;
}

ModelScore score(const std::string& model, const std::string& sample, const std::string& tuning,
                 double parameters, const Dataset& d, const Eigen::VectorXd& fitted) {
    ModelScore s{model, sample, tuning, parameters};
    stats::CompensatedSum y_sum;
    for (Eigen::Index i = 0; i < d.n(); ++i) {
        if (std::isnan(fitted[i])) {
            ++s.skipped;
            continue;
        }
        ++s.n;
        y_sum.add(d.y()[i]);
    }
    if (s.n == 0) throw InsufficientDataError(model + ": no predictions on the " + sample + " sample");
    const double mean = y_sum.value() / static_cast<double>(s.n);
    stats::CompensatedSum sse, sst;
    for (Eigen::Index i = 0; i < d.n(); ++i) {
        if (std::isnan(fitted[i])) continue;
        const double e = d.y()[i] - fitted[i];
        sse.add(e * e);
        sst.add((d.y()[i] - mean) * (d.y()[i] - mean));
    }
    const auto n = static_cast<double>(s.n);
    s.mse = sse.value() / n;
    s.r2 = sst.value() > 0.0 ? 1.0 - sse.value() / sst.value() : (sse.value() == 0.0 ? 1.0 : kNaN);
    s.aic = n * std::log(s.mse) + 2.0 * parameters;
    return s;
}

} // namespace

VarianceModel ModelFile::variance_model(std::size_t l) const {
    if (l >= gamma.size()) throw OutOfRangeError("coefficient index out of range");
    return VarianceModel(alpha, pi_alpha, gamma[l]);
}

Json model_to_json(const ModelFile& m) {
    const FittedVCM& f = m.fit;
    Json theta = Json::array();
    for (std::size_t l = 0; l < f.r(); ++l) {
        const auto block = f.theta().block(l);
        theta.push_back(std::vector<double>(block.data(), block.data() + block.size()));
    }
    Json gamma = Json::array();
    for (const auto& g : m.gamma) gamma.push_back(matrix_json(g));
    Json j;
    j["format"] = "lagvcm-model";
    j["version"] = 1;
    j["covariates"] = m.covariates;
    j["plan"] = f.plan().levels();
    j["theta"] = theta;
    j["density"] = density_to_json(f.density());
    j["nu"] = f.nu();
    j["n"] = f.n();
    j["residuals"] = std::vector<double>(f.residuals().data(), f.residuals().data() + f.residuals().size());
    j["inference"] = {{"alpha", m.alpha}, {"pi_alpha", m.pi_alpha}, {"gamma", gamma}};
    if (m.selection)
        j["selection"] = {{"cv_score", m.selection->cv_score}, {"candidates", m.selection->candidates_evaluated}};
    return j;
}

ModelFile model_from_json(const Json& j) {
    try {
        if (!j.is_object() || j.value("format", "") != "lagvcm-model") throw ConfigError("not a lagvcm model file");
        const TruncationPlan plan(j.at("plan").get<std::vector<int>>());
        Eigen::VectorXd theta(plan.total());
        const Json& blocks = j.at("theta");
        if (blocks.size() != plan.size()) throw ConfigError("model field 'theta': one block per coefficient expected");
        for (std::size_t l = 0; l < plan.size(); ++l) {
            const Eigen::VectorXd b = vector_from(blocks[l]);
            if (b.size() != plan.level(l)) throw ConfigError("model field 'theta': block size differs from plan");
            theta.segment(plan.offset(l), b.size()) = b;
        }
        FittedVCM fit(CoefficientVector(theta, plan), density_from_json(j.at("density")), j.at("nu").get<double>(),
                      j.at("n").get<Eigen::Index>(), vector_from(j.at("residuals")));
        const Json& inf = j.at("inference");
        std::vector<Eigen::MatrixXd> gamma;
        for (std::size_t l = 0; l < inf.at("gamma").size(); ++l)
            gamma.push_back(matrix_from(inf.at("gamma")[l], "inference.gamma"));
        if (gamma.size() != plan.size()) throw ConfigError("model field 'inference.gamma': one matrix per coefficient expected");
        ModelFile m{std::move(fit), j.at("covariates").get<std::vector<std::string>>(), std::move(gamma),
                    inf.at("alpha").get<double>(), inf.at("pi_alpha").get<double>(), std::nullopt};
        if (j.contains("selection")) {
            TruncationSelection s;
            s.plan = plan;
            s.cv_score = j["selection"].at("cv_score").get<double>();
            s.candidates_evaluated = j["selection"].at("candidates").get<std::size_t>();
            m.selection = s;
        }
        return m;
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("malformed model file: ") + e.what());
    }
}

std::pair<TruncationPlan, std::optional<TruncationSelection>> choose_plan(const Dataset& data,
                                                                          const AnalysisConfig& cfg,
                                                                          const DesignDensity& h) {
    const auto r = static_cast<std::size_t>(data.r());
    const TruncationConfig& tc = cfg.truncation;
    if (!tc.plan.empty()) {
        if (tc.plan.size() != r)
            throw ConfigError("config field 'truncation.plan': expected " + std::to_string(r) + " levels, found " +
                              std::to_string(tc.plan.size()));
        return {TruncationPlan(tc.plan), std::nullopt};
    }
    std::vector<LevelRange> grid = tc.grid;
    if (grid.empty()) grid = default_truncation_grid(static_cast<std::size_t>(data.n()), r);
    if (grid.size() == 1 && r > 1) grid.resize(r, grid[0]);
    if (grid.size() != r)
        throw ConfigError("config field 'truncation.grid': expected " + std::to_string(r) + " ranges, found " +
                          std::to_string(grid.size()));
    TruncationSelection sel = select_truncation_loocv(data, grid, h, cfg.nu, tc.search);
    return {sel.plan, sel};
}

FitResult run_fit(const LoadedData& loaded, const AnalysisConfig& cfg) {
    const Dataset& data = loaded.data;
    if (cfg.inference.alpha < 1.0 && !cfg.inference.pi_alpha)
        throw ConfigError("config field 'inference.pi_alpha': required when alpha < 1");
    const DesignDensity h = make_density(cfg.density, data);
    auto [plan, selection] = choose_plan(data, cfg, h);
    FittedVCM fitted = fit(data, plan, h, cfg.nu);
    std::vector<Eigen::MatrixXd> gamma;
    for (std::size_t l = 0; l < plan.size(); ++l) gamma.push_back(estimate_gamma(data, l, plan.level(l), h, cfg.nu));
    const double pi = cfg.inference.pi_alpha.value_or(fitted.residual_variance());
    FitResult out{ModelFile{std::move(fitted), loaded.covariates, std::move(gamma), cfg.inference.alpha, pi, selection},
                  make_curve_grid(cfg.curve, data),
                  {}};
    CsvWriter w({"l", "t", "estimate"});
    for (std::size_t l = 0; l < plan.size(); ++l)
        for (double t : out.grid) w.cell(l + 1).cell(t).cell(evaluate_coefficient(out.model.fit, l, t)).end_row();
    out.curve_csv = w.str();
    return out;
}

std::string run_infer(const ModelFile& model, const CsvTable& points, double level) {
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("level must lie in (0, 1)");
    const std::vector<double> ls = points.numeric("l");
    const std::vector<double> ts = points.numeric("t");
    const std::vector<double> b0 = points.has_column("beta0") ? points.numeric("beta0") : std::vector<double>(ts.size(), 0.0);
    const FittedVCM& fit = model.fit;
    std::vector<std::optional<VarianceModel>> vm(fit.r());
    CsvWriter w({"l", "t", "beta0", "estimate", "se", "lower", "upper", "statistic", "p_value", "reject"});
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const std::string where = "line " + std::to_string(points.line_numbers[i]);
        const double lv = ls[i];
        if (lv != std::floor(lv) || lv < 1 || lv > static_cast<double>(fit.r()))
            throw ConfigError(where + ", column 'l': coefficient index must be in 1.." + std::to_string(fit.r()));
        const auto l = static_cast<std::size_t>(lv) - 1;
        const double t = ts[i];
        try {
            if (!(t > 0.0)) throw DomainError("t must be positive");
            fit.density().checked(t);
        } catch (const Error&) {
            throw ConfigError(where + ": t = " + format_double(t) + " lies outside the density support");
        }
        if (!vm[l]) vm[l] = model.variance_model(l);
        const ConfidenceInterval ci = confidence_interval(fit, l, t, level, *vm[l]);
        const TestResult test = pointwise_test(fit, l, t, b0[i], level, *vm[l]);
        const double se = std::sqrt(asymptotic_variance(fit, l, t, *vm[l])) *
                          std::pow(static_cast<double>(fit.n()), -vm[l]->alpha() / 2.0);
        w.cell(l + 1).cell(t).cell(b0[i]).cell(ci.estimate).cell(se).cell(ci.lower).cell(ci.upper);
        w.cell(test.statistic).cell(test.p_value).cell(test.reject).end_row();
    }
    return w.str();
}

BandsResult run_bands(const LoadedData& loaded, const AnalysisConfig& cfg) {
    const Dataset& data = loaded.data;
    const DesignDensity h = make_density(cfg.density, data);
    const TruncationPlan plan = choose_plan(data, cfg, h).first;
    const std::vector<double> grid = make_curve_grid(cfg.curve, data);
    const BootstrapConfig& b = cfg.bootstrap;
    BandsResult out{plan, bootstrap_bands(data, plan, h, cfg.nu, b.replicates, b.level, grid, b.seed, b.threads), {}};
    CsvWriter w({"l", "t", "lower", "estimate", "upper"});
    for (std::size_t l = 0; l < plan.size(); ++l) {
        const auto li = static_cast<Eigen::Index>(l);
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const auto gi = static_cast<Eigen::Index>(g);
            w.cell(l + 1).cell(grid[g]).cell(out.bands.lower(li, gi)).cell(out.bands.estimate(li, gi)).cell(out.bands.upper(li, gi));
            w.end_row();
        }
    }
    out.csv = w.str();
    return out;
}

CompareResult run_compare(const LoadedData& loaded, const AnalysisConfig& cfg) {
    const Dataset& full = loaded.data;
    std::vector<std::pair<std::string, Dataset>> samples;
    if (cfg.split) {
        const std::vector<Eigen::Index> perm = permutation(full.n(), cfg.split->seed);
        const auto n_train = std::clamp<Eigen::Index>(
            static_cast<Eigen::Index>(std::llround(cfg.split->train_fraction * static_cast<double>(full.n()))), 1, full.n() - 1);
        if (full.n() < 2) throw ConfigError("config field 'split': needs at least two rows");
        std::vector<Eigen::Index> train(perm.begin(), perm.begin() + n_train), test(perm.begin() + n_train, perm.end());
        std::sort(train.begin(), train.end());
        std::sort(test.begin(), test.end());
        samples.emplace_back("train", full.subset(train));
        samples.emplace_back("test", full.subset(test));
    }
    samples.emplace_back("full", full);
    const Dataset& train = samples.front().second;

    struct Model {
        std::string name;
        std::string tuning;
        double parameters;
        std::function<Eigen::VectorXd(const Dataset&)> predict;
    };
    std::vector<Model> models;

    // GL
    const DesignDensity h = make_density(cfg.density, train);
    const TruncationPlan plan = choose_plan(train, cfg, h).first;
    const FittedVCM gl = fit(train, plan, h, cfg.nu);
    models.push_back({"GL", plan_label(plan), static_cast<double>(plan.total()),
                      [&gl](const Dataset& d) {
                          Eigen::VectorXd out(d.n());
                          std::vector<double> x(static_cast<std::size_t>(d.r()));
                          for (Eigen::Index i = 0; i < d.n(); ++i) {
                              for (Eigen::Index l = 0; l < d.r(); ++l) x[static_cast<std::size_t>(l)] = d.x()(i, l);
                              try {
                                  out[i] = predict(gl, d.t()[i], x);
                              } catch (const DensityFloorError&) {
                                  out[i] = kNaN;
                              }
                          }
                          return out;
                      }});

    // LL
    double bandwidth = 0.0;
    if (cfg.kernel.bandwidth) {
        bandwidth = *cfg.kernel.bandwidth;
    } else {
        const std::vector<double> grid = cfg.kernel.grid.empty() ? default_bandwidth_grid(train) : cfg.kernel.grid;
        bandwidth = select_bandwidth_cv(train, KernelMethod::local_linear, grid,
                                        {cfg.kernel.type, cfg.kernel.max_skip_fraction}).bandwidth;
    }
    const KernelConfig kcfg{cfg.kernel.type, bandwidth};
    const KernelSmoother ll(train, KernelMethod::local_linear);
    const KernelFittedValues ll_train = kernel_fitted_values(ll, kcfg, true);
    models.push_back({"LL", "h=" + format_double(bandwidth), ll_train.trace,
                      [&](const Dataset& d) -> Eigen::VectorXd {
                          if (&d == &train) return ll_train.fitted;
                          Eigen::VectorXd out(d.n());
                          for (Eigen::Index i = 0; i < d.n(); ++i) {
                              try {
                                  out[i] = ll.coefficients(d.t()[i], kcfg).dot(d.x().row(i).transpose());
                              } catch (const InsufficientDataError&) {
                                  out[i] = kNaN;
                              } catch (const SingularMatrixError&) {
                                  out[i] = kNaN;
                              }
                          }
                          return out;
                      }});

    // constant-coefficient linear regression
    const Eigen::VectorXd beta = LeastSquares(train.x()).solve(train.y());
    models.push_back({"LR", "-", static_cast<double>(train.r()),
                      [&beta](const Dataset& d) -> Eigen::VectorXd { return d.x() * beta; }});

    CompareResult out;
    CsvWriter report({"model", "sample", "tuning", "parameters", "n", "skipped", "mse", "r2", "aic"});
    CsvWriter resid({"model", "sample", "t", "fitted", "residual"});
    CsvWriter qq({"model", "sample", "rank", "probability", "normal_quantile", "residual"});
    for (const auto& m : models) {
        for (const auto& [name, d] : samples) {
            const Eigen::VectorXd fitted = m.predict(d);
            const ModelScore s = score(m.name, name, m.tuning, m.parameters, d, fitted);
            report.cell(s.model).cell(s.sample).cell(s.tuning).cell(s.parameters).cell(static_cast<long long>(s.n));
            report.cell(static_cast<long long>(s.skipped)).cell(s.mse).cell(s.r2).cell(s.aic).end_row();
            out.scores.push_back(s);
            std::vector<double> residuals;
            for (Eigen::Index i = 0; i < d.n(); ++i) {
                if (std::isnan(fitted[i])) continue;
                const double e = d.y()[i] - fitted[i];
                resid.cell(m.name).cell(name).cell(d.t()[i]).cell(fitted[i]).cell(e).end_row();
                residuals.push_back(e);
            }
            std::sort(residuals.begin(), residuals.end());
            const auto n = static_cast<double>(residuals.size());
            for (std::size_t i = 0; i < residuals.size(); ++i) {
                const double p = (static_cast<double>(i) + 0.5) / n;
                qq.cell(m.name).cell(name).cell(i + 1).cell(p).cell(stats::normal_quantile(p)).cell(residuals[i]).end_row();
            }
        }
    }
    out.report_csv = report.str();
    out.residuals_csv = resid.str();
    out.qq_csv = qq.str();
    return out;
}

std::string run_simulate(const SimulateConfig& cfg) {
    CsvWriter w({"n", "coefficients", "method", "replications", "replications_used", "failures", "mise", "mise_se",
                 "tuning_1", "tuning_2", "skipped_points"});
    for (std::size_t n : cfg.sizes) {
        Scenario s = cfg.scenario;
        s.n = n;
        s.validate();
        const SimulationReport report = run_mise_experiment(s, cfg.methods, cfg.options);
        std::string coef;
        for (std::size_t l = 0; l < s.coefficients.size(); ++l) coef += (l ? ";" : "") + to_string(s.coefficients[l]);
        for (const auto& m : report.methods) {
            const double t1 = m.mean_tuning.empty() ? kNaN : m.mean_tuning[0];
            const double t2 = m.mean_tuning.size() > 1 ? m.mean_tuning[1] : t1;
            w.cell(n).cell(coef).cell(to_string(m.method)).cell(s.replications).cell(m.replications_used);
            w.cell(m.failures).cell(m.mise).cell(m.mise_se).cell(t1).cell(t2).cell(static_cast<long long>(m.skipped_points));
            w.end_row();
        }
    }
    return w.str();
}

std::string render_svg(const std::vector<Panel>& panels) {
    constexpr double width = 640.0, height = 240.0, margin = 40.0;
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height * panels.size()
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    for (std::size_t p = 0; p < panels.size(); ++p) {
        const Panel& panel = panels[p];
        const double top = height * static_cast<double>(p);
        double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
        for (double v : panel.x) xmin = std::min(xmin, v), xmax = std::max(xmax, v);
        for (const auto& c : panel.curves)
            for (double v : c)
                if (std::isfinite(v)) ymin = std::min(ymin, v), ymax = std::max(ymax, v);
        if (!(xmax > xmin)) xmax = xmin + 1.0;
        if (!(ymax > ymin)) ymin -= 0.5, ymax += 0.5;
        auto sx = [&](double v) { return margin + (v - xmin) / (xmax - xmin) * (width - 2 * margin); };
        auto sy = [&](double v) { return top + height - margin - (v - ymin) / (ymax - ymin) * (height - 2 * margin); };
        os << "<text x=\"" << margin << "\" y=\"" << top + 20 << "\">" << panel.title << "</text>\n";
        os << "<rect x=\"" << margin << "\" y=\"" << top + margin << "\" width=\"" << width - 2 * margin
           << "\" height=\"" << height - 2 * margin << "\" fill=\"none\" stroke=\"#999\"/>\n";
        os << "<text x=\"" << margin << "\" y=\"" << top + height - margin + 14 << "\">" << format_double(xmin)
           << "</text><text x=\"" << width - margin << "\" y=\"" << top + height - margin + 14
           << "\" text-anchor=\"end\">" << format_double(xmax) << "</text>\n";
        os << "<text x=\"" << margin - 4 << "\" y=\"" << top + margin + 4 << "\" text-anchor=\"end\">"
           << format_double(ymax) << "</text><text x=\"" << margin - 4 << "\" y=\"" << top + height - margin
           << "\" text-anchor=\"end\">" << format_double(ymin) << "</text>\n";
        for (std::size_t c = 0; c < panel.curves.size(); ++c) {
            os << "<polyline fill=\"none\" stroke=\"" << colors[c % 4] << "\" points=\"";
            for (std::size_t i = 0; i < panel.x.size() && i < panel.curves[c].size(); ++i)
                if (std::isfinite(panel.curves[c][i])) os << sx(panel.x[i]) << ',' << sy(panel.curves[c][i]) << ' ';
            os << "\"/>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

} // namespace lagvcm::cli
