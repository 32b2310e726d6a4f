#pragma once

#include "lagvcm/baselines.hpp"
#include "lagvcm/basis.hpp"
#include "lagvcm/cli/csv.hpp"
#include "lagvcm/estimator.hpp"
#include "lagvcm/simulation.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lagvcm::cli {

using Json = nlohmann::ordered_json;

/// Design density of t. Unset parameters are estimated from the data:
/// the exponential rate by 1 / mean(t), uniform bounds by min and max of t.
struct DensityConfig {
    DesignDensity::Family family = DesignDensity::Family::exponential;
    std::optional<double> rate;
    std::optional<double> lower;
    std::optional<double> upper;
    std::optional<double> floor;  ///< default 0, or 1e-3 for empirical
    double bandwidth = 0.0;       ///< empirical only; 0 selects Silverman's rule
};

DesignDensity make_density(const DensityConfig& cfg, const Dataset& data);

/// Fixed plan when `plan` is non-empty, otherwise LOOCV over `grid`
/// (default_truncation_grid when empty).
struct TruncationConfig {
    std::vector<int> plan;
    std::vector<LevelRange> grid;
    GridSearch search = GridSearch::automatic;
};

/// Evaluation grid; unset ends default to the range of t in the data.
struct CurveConfig {
    std::optional<double> from;
    std::optional<double> to;
    int points = 101;
};

std::vector<double> make_curve_grid(const CurveConfig& cfg, const Dataset& data);

struct InferenceConfig {
    double alpha = 1.0;
    std::optional<double> pi_alpha;
    double level = 0.05;
};

struct BootstrapConfig {
    int replicates = 500;
    double level = 0.05;
    std::uint64_t seed = 1;
    unsigned threads = 0;
};

struct KernelSection {
    KernelType type = KernelType::epanechnikov;
    std::vector<double> grid;            ///< empty: default_bandwidth_grid
    std::optional<double> bandwidth;     ///< skips CV when set
    double max_skip_fraction = 0.01;
};

struct SplitConfig {
    double train_fraction = 0.8;
    std::uint64_t seed = 1;
};

/// Settings shared by fit, infer, bands and compare.
struct AnalysisConfig {
    DataSpec data;
    DensityConfig density;
    double nu = 0.0;
    TruncationConfig truncation;
    CurveConfig curve;
    InferenceConfig inference;
    BootstrapConfig bootstrap;
    KernelSection kernel;
    std::optional<SplitConfig> split;
};

struct SimulateConfig {
    Scenario scenario;
    std::vector<std::size_t> sizes{400};  ///< one report block per n
    std::vector<Method> methods{Method::GL, Method::LL, Method::NW};
    ExperimentOptions options;
};

/// Parsers reject unknown keys and wrong types with a ConfigError naming
/// the field, then validate values against the library preconditions.
AnalysisConfig parse_analysis_config(const Json& j);
SimulateConfig parse_simulate_config(const Json& j);

Json to_json(const AnalysisConfig& cfg);
Json to_json(const SimulateConfig& cfg);

/// Parses a JSON file; a missing path yields an empty object.
Json read_json_file(const std::optional<std::filesystem::path>& path);

std::string to_string(KernelType k);
std::string to_string(GridSearch s);
std::string to_string(DesignDensity::Family f);

} // namespace lagvcm::cli
