#include "lagvcm/cli/config.hpp"

#include "lagvcm/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace lagvcm::cli {
namespace {

[[noreturn]] void fail(const std::string& field, const std::string& why) {
    throw ConfigError("config field '" + field + "': " + why);
}

/// Typed access to one JSON object that remembers which keys were read.
class Fields {
public:
    Fields(const Json& j, std::string path) : path_(std::move(path)) {
        if (j.is_null()) return;
        if (!j.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
        j_ = &j;
    }

    std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const Json* get(const std::string& key) {
        seen_.insert(key);
        if (!j_) return nullptr;
        const auto it = j_->find(key);
        if (it == j_->end() || it->is_null()) return nullptr;
        return &*it;
    }

    const Json& object(const std::string& key) {
        const Json* v = get(key);
        return v ? *v : null_;
    }

    void number(const std::string& key, double& out) {
        if (const Json* v = get(key)) out = as_number(*v, name(key));
    }

    void number(const std::string& key, std::optional<double>& out) {
        if (const Json* v = get(key)) out = as_number(*v, name(key));
    }

    template <class Int>
    void integer(const std::string& key, Int& out) {
        if (const Json* v = get(key)) out = as_integer<Int>(*v, name(key));
    }

    void string(const std::string& key, std::string& out) {
        if (const Json* v = get(key)) out = as_string(*v, name(key));
    }

    void boolean(const std::string& key, bool& out) {
        if (const Json* v = get(key)) {
            if (!v->is_boolean()) fail(name(key), "expected true or false");
            out = v->get<bool>();
        }
    }

    const Json* array(const std::string& key) {
        const Json* v = get(key);
        if (v && !v->is_array()) fail(name(key), "expected an array");
        return v;
    }

    void finish() const {
        if (!j_) return;
        for (const auto& [key, value] : j_->items()) {
            if (!seen_.count(key)) fail(name(key), "unknown key");
        }
    }

    static double as_number(const Json& v, const std::string& field) {
        if (!v.is_number()) fail(field, "expected a number");
        return v.get<double>();
    }

    template <class Int>
    static Int as_integer(const Json& v, const std::string& field) {
        if (!v.is_number_integer()) fail(field, "expected an integer");
        if constexpr (std::is_unsigned_v<Int>) {
            if (v.is_number_unsigned()) return static_cast<Int>(v.get<std::uint64_t>());
            const auto s = v.get<std::int64_t>();
            if (s < 0) fail(field, "must be non-negative");
            return static_cast<Int>(s);
        } else {
            return static_cast<Int>(v.get<std::int64_t>());
        }
    }

    static std::string as_string(const Json& v, const std::string& field) {
        if (!v.is_string()) fail(field, "expected a string");
        return v.get<std::string>();
    }

private:
    const Json* j_ = nullptr;
    std::string path_;
    std::set<std::string> seen_;
    Json null_;
};

DesignDensity::Family parse_family(const std::string& s, const std::string& field) {
    if (s == "exponential") return DesignDensity::Family::exponential;
    if (s == "uniform") return DesignDensity::Family::uniform;
    if (s == "empirical") return DesignDensity::Family::empirical;
    fail(field, "unknown density family '" + s + "' (exponential, uniform, empirical)");
}

KernelType parse_kernel(const std::string& s, const std::string& field) {
    if (s == "epanechnikov") return KernelType::epanechnikov;
    if (s == "gaussian") return KernelType::gaussian;
    fail(field, "unknown kernel '" + s + "' (epanechnikov, gaussian)");
}

GridSearch parse_search(const std::string& s, const std::string& field) {
    if (s == "automatic") return GridSearch::automatic;
    if (s == "cartesian") return GridSearch::cartesian;
    if (s == "coordinate") return GridSearch::coordinate;
    fail(field, "unknown search '" + s + "' (automatic, cartesian, coordinate)");
}

DensityConfig parse_density(const Json& j, const std::string& path) {
    DensityConfig d;
    Fields f(j, path);
    std::string family = to_string(d.family);
    f.string("family", family);
    d.family = parse_family(family, f.name("family"));
    f.number("rate", d.rate);
    f.number("lower", d.lower);
    f.number("upper", d.upper);
    f.number("floor", d.floor);
    f.number("bandwidth", d.bandwidth);
    f.finish();
    if (d.rate && !(*d.rate > 0.0)) fail(f.name("rate"), "must be positive");
    if (d.floor && !(*d.floor >= 0.0)) fail(f.name("floor"), "must be >= 0");
    if (d.lower && d.upper && !(*d.lower < *d.upper)) fail(f.name("upper"), "must exceed lower");
    if (d.lower && *d.lower < 0.0) fail(f.name("lower"), "must be >= 0");
    if (!(d.bandwidth >= 0.0)) fail(f.name("bandwidth"), "must be >= 0");
    return d;
}

Json density_json(const DensityConfig& d) {
    auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
    return Json{{"family", to_string(d.family)}, {"rate", opt(d.rate)},   {"lower", opt(d.lower)},
                {"upper", opt(d.upper)},         {"floor", opt(d.floor)}, {"bandwidth", d.bandwidth}};
}

LevelRange parse_range(const Json& v, const std::string& field) {
    if (!v.is_array() || v.size() != 2) fail(field, "expected [lo, hi]");
    LevelRange r{Fields::as_integer<int>(v[0], field), Fields::as_integer<int>(v[1], field)};
    if (r.lo < 1 || r.hi < r.lo) fail(field, "need 1 <= lo <= hi");
    return r;
}

std::vector<LevelRange> parse_grid(const Json& v, const std::string& field) {
    std::vector<LevelRange> grid;
    if (!v.empty() && v[0].is_number()) {
        grid.push_back(parse_range(v, field));  // one range shared by every coefficient
        return grid;
    }
    for (std::size_t i = 0; i < v.size(); ++i) grid.push_back(parse_range(v[i], field + "[" + std::to_string(i) + "]"));
    return grid;
}

Json grid_json(const std::vector<LevelRange>& grid) {
    if (grid.empty()) return nullptr;
    Json a = Json::array();
    for (const auto& r : grid) a.push_back({r.lo, r.hi});
    return a;
}

TruncationConfig parse_truncation(const Json& j, const std::string& path) {
    TruncationConfig t;
    Fields f(j, path);
    if (const Json* p = f.array("plan")) {
        for (const auto& v : *p) {
            const int m = Fields::as_integer<int>(v, f.name("plan"));
            if (m < 1) fail(f.name("plan"), "levels must be >= 1");
            t.plan.push_back(m);
        }
    }
    if (const Json* g = f.array("grid")) t.grid = parse_grid(*g, f.name("grid"));
    std::string search = to_string(t.search);
    f.string("search", search);
    t.search = parse_search(search, f.name("search"));
    f.finish();
    return t;
}

std::vector<double> parse_positive_list(const Json* v, const std::string& field) {
    std::vector<double> out;
    if (!v) return out;
    for (const auto& e : *v) {
        const double h = Fields::as_number(e, field);
        if (!(h > 0.0)) fail(field, "entries must be positive");
        out.push_back(h);
    }
    return out;
}

} // namespace

std::string to_string(KernelType k) { return k == KernelType::gaussian ? "gaussian" : "epanechnikov"; }

std::string to_string(GridSearch s) {
    switch (s) {
    case GridSearch::cartesian: return "cartesian";
    case GridSearch::coordinate: return "coordinate";
    default: return "automatic";
    }
}

std::string to_string(DesignDensity::Family f) {
    switch (f) {
    case DesignDensity::Family::uniform: return "uniform";
    case DesignDensity::Family::empirical: return "empirical";
    default: return "exponential";
    }
}

DesignDensity make_density(const DensityConfig& cfg, const Dataset& data) {
    const Eigen::VectorXd& t = data.t();
    switch (cfg.family) {
    case DesignDensity::Family::uniform:
        return DesignDensity::uniform(cfg.lower.value_or(0.0), cfg.upper.value_or(t.maxCoeff()), cfg.floor.value_or(0.0));
    case DesignDensity::Family::empirical: {
        const std::vector<double> sample(t.data(), t.data() + t.size());
        return DesignDensity::empirical(sample, cfg.floor.value_or(1e-3), cfg.bandwidth);
    }
    default:
        return DesignDensity::exponential(cfg.rate.value_or(1.0 / t.mean()), cfg.floor.value_or(0.0));
    }
}

std::vector<double> make_curve_grid(const CurveConfig& cfg, const Dataset& data) {
    const double from = cfg.from.value_or(data.t().minCoeff());
    const double to = cfg.to.value_or(data.t().maxCoeff());
    if (!(from > 0.0)) fail("curve.from", "must be positive");
    if (to < from) fail("curve.to", "must be >= curve.from");
    std::vector<double> grid(static_cast<std::size_t>(cfg.points));
    for (int g = 0; g < cfg.points; ++g)
        grid[static_cast<std::size_t>(g)] = cfg.points == 1 ? from : from + (to - from) * g / (cfg.points - 1);
    return grid;
}

AnalysisConfig parse_analysis_config(const Json& j) {
    AnalysisConfig c;
    Fields root(j, "");
    {
        Fields f(root.object("data"), "data");
        f.string("t", c.data.t);
        if (const Json* x = f.array("x"))
            for (const auto& v : *x) c.data.x.push_back(Fields::as_string(v, f.name("x")));
        f.string("y", c.data.y);
        f.number("t_scale", c.data.t_scale);
        f.boolean("intercept", c.data.intercept);
        f.finish();
        if (!(c.data.t_scale > 0.0)) fail("data.t_scale", "must be positive");
    }
    c.density = parse_density(root.object("density"), "density");
    root.number("nu", c.nu);
    if (!(c.nu >= 0.0)) fail("nu", "must be >= 0");
    c.truncation = parse_truncation(root.object("truncation"), "truncation");
    {
        Fields f(root.object("curve"), "curve");
        f.number("from", c.curve.from);
        f.number("to", c.curve.to);
        f.integer("points", c.curve.points);
        f.finish();
        if (c.curve.points < 1) fail("curve.points", "must be >= 1");
    }
    {
        Fields f(root.object("inference"), "inference");
        f.number("alpha", c.inference.alpha);
        f.number("pi_alpha", c.inference.pi_alpha);
        f.number("level", c.inference.level);
        f.finish();
        if (!(c.inference.alpha > 0.0 && c.inference.alpha <= 1.0)) fail("inference.alpha", "must lie in (0, 1]");
        if (c.inference.pi_alpha && !(*c.inference.pi_alpha > 0.0)) fail("inference.pi_alpha", "must be positive");
        if (!(c.inference.level > 0.0 && c.inference.level < 1.0)) fail("inference.level", "must lie in (0, 1)");
    }
    {
        Fields f(root.object("bootstrap"), "bootstrap");
        f.integer("replicates", c.bootstrap.replicates);
        f.number("level", c.bootstrap.level);
        f.integer("seed", c.bootstrap.seed);
        f.integer("threads", c.bootstrap.threads);
        f.finish();
        if (c.bootstrap.replicates < 100) fail("bootstrap.replicates", "must be >= 100");
        if (!(c.bootstrap.level > 0.0 && c.bootstrap.level < 1.0)) fail("bootstrap.level", "must lie in (0, 1)");
    }
    {
        Fields f(root.object("kernel"), "kernel");
        std::string type = to_string(c.kernel.type);
        f.string("type", type);
        c.kernel.type = parse_kernel(type, f.name("type"));
        c.kernel.grid = parse_positive_list(f.array("grid"), f.name("grid"));
        f.number("bandwidth", c.kernel.bandwidth);
        f.number("max_skip_fraction", c.kernel.max_skip_fraction);
        f.finish();
        if (c.kernel.bandwidth && !(*c.kernel.bandwidth > 0.0)) fail("kernel.bandwidth", "must be positive");
        if (!(c.kernel.max_skip_fraction >= 0.0 && c.kernel.max_skip_fraction <= 1.0))
            fail("kernel.max_skip_fraction", "must lie in [0, 1]");
    }
    if (const Json* s = root.get("split")) {
        SplitConfig split;
        Fields f(*s, "split");
        f.number("train_fraction", split.train_fraction);
        f.integer("seed", split.seed);
        f.finish();
        if (!(split.train_fraction > 0.0 && split.train_fraction < 1.0))
            fail("split.train_fraction", "must lie in (0, 1)");
        c.split = split;
    }
    root.finish();
    return c;
}

Json to_json(const AnalysisConfig& c) {
    Json x = Json::array();
    for (const auto& name : c.data.x) x.push_back(name);
    Json plan = Json::array();
    for (int m : c.truncation.plan) plan.push_back(m);
    auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
    Json j;
    j["data"] = {{"t", c.data.t}, {"x", x}, {"y", c.data.y}, {"t_scale", c.data.t_scale}, {"intercept", c.data.intercept}};
    j["density"] = density_json(c.density);
    j["nu"] = c.nu;
    j["truncation"] = {{"plan", plan}, {"grid", grid_json(c.truncation.grid)}, {"search", to_string(c.truncation.search)}};
    j["curve"] = {{"from", opt(c.curve.from)}, {"to", opt(c.curve.to)}, {"points", c.curve.points}};
    j["inference"] = {{"alpha", c.inference.alpha}, {"pi_alpha", opt(c.inference.pi_alpha)}, {"level", c.inference.level}};
    j["bootstrap"] = {{"replicates", c.bootstrap.replicates},
                      {"level", c.bootstrap.level},
                      {"seed", c.bootstrap.seed},
                      {"threads", c.bootstrap.threads}};
    j["kernel"] = {{"type", to_string(c.kernel.type)},
                   {"grid", c.kernel.grid},
                   {"bandwidth", opt(c.kernel.bandwidth)},
                   {"max_skip_fraction", c.kernel.max_skip_fraction}};
    j["split"] = c.split ? Json{{"train_fraction", c.split->train_fraction}, {"seed", c.split->seed}} : Json(nullptr);
    return j;
}

SimulateConfig parse_simulate_config(const Json& j) {
    SimulateConfig c;
    Fields root(j, "");
    {
        Scenario& s = c.scenario;
        Fields f(root.object("scenario"), "scenario");
        if (const Json* coef = f.array("coefficients")) {
            s.coefficients.clear();
            for (const auto& v : *coef) {
                try {
                    s.coefficients.push_back(parse_test_function(Fields::as_string(v, f.name("coefficients"))));
                } catch (const ConfigError& e) {
                    fail(f.name("coefficients"), e.what());
                }
            }
        }
        if (const Json* n = f.get("n")) {
            c.sizes.clear();
            if (n->is_array()) {
                for (const auto& v : *n) c.sizes.push_back(Fields::as_integer<std::size_t>(v, f.name("n")));
                if (c.sizes.empty()) fail(f.name("n"), "must not be empty");
            } else {
                c.sizes.push_back(Fields::as_integer<std::size_t>(*n, f.name("n")));
            }
        }
        f.number("sigma", s.sigma);
        {
            Fields nf(f.object("noise"), f.name("noise"));
            std::string model = s.noise.model == NoiseModel::long_memory ? "long_memory" : "iid_gaussian";
            nf.string("model", model);
            if (model == "iid_gaussian") s.noise.model = NoiseModel::iid_gaussian;
            else if (model == "long_memory") s.noise.model = NoiseModel::long_memory;
            else fail(nf.name("model"), "unknown noise model '" + model + "' (iid_gaussian, long_memory)");
            nf.number("alpha", s.noise.alpha);
            nf.finish();
        }
        f.integer("replications", s.replications);
        f.integer("seed", s.seed);
        if (const Json* cov = f.array("covariates")) {
            s.covariates.clear();
            for (std::size_t i = 0; i < cov->size(); ++i) {
                Fields cf((*cov)[i], f.name("covariates") + "[" + std::to_string(i) + "]");
                CovariateSpec spec;
                cf.number("mean", spec.mean);
                cf.number("sd", spec.sd);
                cf.finish();
                s.covariates.push_back(spec);
            }
        }
        f.number("t_mean", s.t_mean);
        f.finish();
        for (std::size_t n : c.sizes) {
            s.n = n;
            s.validate();
        }
        s.n = c.sizes.front();
    }
    if (const Json* m = root.array("methods")) {
        c.methods.clear();
        for (const auto& v : *m) {
            try {
                c.methods.push_back(parse_method(Fields::as_string(v, "methods")));
            } catch (const ConfigError& e) {
                fail("methods", e.what());
            }
        }
        if (c.methods.empty()) fail("methods", "must not be empty");
    }
    {
        Fields f(root.object("gl"), "gl");
        if (const Json* g = f.array("grid")) {
            c.options.truncation_grid = parse_grid(*g, f.name("grid"));
            if (c.options.truncation_grid.size() == 1) c.options.truncation_grid.resize(2, c.options.truncation_grid[0]);
            if (c.options.truncation_grid.size() != 2) fail(f.name("grid"), "needs one range per coefficient");
        }
        std::string search = to_string(c.options.search);
        f.string("search", search);
        c.options.search = parse_search(search, f.name("search"));
        if (const Json* d = f.get("density")) {
            const DensityConfig dc = parse_density(*d, f.name("density"));
            if (dc.family == DesignDensity::Family::exponential) {
                if (!dc.rate) fail(f.name("density.rate"), "required in simulation configs");
                c.options.density = DesignDensity::exponential(*dc.rate, dc.floor.value_or(0.0));
            } else if (dc.family == DesignDensity::Family::uniform) {
                if (!dc.lower || !dc.upper) fail(f.name("density"), "uniform needs lower and upper");
                c.options.density = DesignDensity::uniform(*dc.lower, *dc.upper, dc.floor.value_or(0.0));
            } else {
                fail(f.name("density.family"), "empirical is not available in simulation configs");
            }
        }
        f.number("nu", c.options.nu);
        if (!(c.options.nu >= 0.0)) fail(f.name("nu"), "must be >= 0");
        f.finish();
    }
    {
        Fields f(root.object("kernel"), "kernel");
        std::string type = to_string(c.options.bandwidth.kernel);
        f.string("type", type);
        c.options.bandwidth.kernel = parse_kernel(type, f.name("type"));
        c.options.bandwidth_grid = parse_positive_list(f.array("grid"), f.name("grid"));
        f.number("max_skip_fraction", c.options.bandwidth.max_skip_fraction);
        f.finish();
        if (!(c.options.bandwidth.max_skip_fraction >= 0.0 && c.options.bandwidth.max_skip_fraction <= 1.0))
            fail("kernel.max_skip_fraction", "must lie in [0, 1]");
    }
    root.integer("threads", c.options.threads);
    root.finish();
    return c;
}

Json to_json(const SimulateConfig& c) {
    const Scenario& s = c.scenario;
    Json coef = Json::array();
    for (auto id : s.coefficients) coef.push_back(to_string(id));
    Json cov = Json::array();
    for (const auto& cs : s.covariates) cov.push_back({{"mean", cs.mean}, {"sd", cs.sd}});
    Json sizes = Json::array();
    for (auto n : c.sizes) sizes.push_back(n);
    Json methods = Json::array();
    for (auto m : c.methods) methods.push_back(to_string(m));
    Json density = nullptr;
    if (c.options.density) {
        const DesignDensity& h = *c.options.density;
        DensityConfig d;
        d.family = h.family();
        if (h.family() == DesignDensity::Family::exponential) d.rate = h.rate();
        else { d.lower = h.lower(); d.upper = h.upper(); }
        d.floor = h.floor();
        density = density_json(d);
    }
    Json j;
    j["scenario"] = {{"coefficients", coef},
                     {"n", c.sizes.size() == 1 ? Json(c.sizes[0]) : sizes},
                     {"sigma", s.sigma},
                     {"noise", {{"model", s.noise.model == NoiseModel::long_memory ? "long_memory" : "iid_gaussian"},
                                {"alpha", s.noise.alpha}}},
                     {"replications", s.replications},
                     {"seed", s.seed},
                     {"covariates", cov},
                     {"t_mean", s.t_mean}};
    j["methods"] = methods;
    j["gl"] = {{"grid", grid_json(c.options.truncation_grid)},
               {"search", to_string(c.options.search)},
               {"density", density},
               {"nu", c.options.nu}};
    j["kernel"] = {{"type", to_string(c.options.bandwidth.kernel)},
                   {"grid", c.options.bandwidth_grid},
                   {"max_skip_fraction", c.options.bandwidth.max_skip_fraction}};
    j["threads"] = c.options.threads;
    return j;
}

Json read_json_file(const std::optional<std::filesystem::path>& path) {
    if (!path) return Json::object();
    std::ifstream in(*path);
    if (!in) throw ConfigError("cannot open '" + path->string() + "'");
    try {
        return Json::parse(in, nullptr, true, true);
    } catch (const Json::parse_error& e) {
        throw ConfigError(path->string() + ": " + e.what());
    }
}

} // namespace lagvcm::cli
