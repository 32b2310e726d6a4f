#pragma once

#include "lagvcm/cli/config.hpp"
#include "lagvcm/cli/csv.hpp"
#include "lagvcm/estimator.hpp"
#include "lagvcm/inference.hpp"

#include <optional>
#include <string>
#include <vector>

namespace lagvcm::cli {

/// A fitted model plus what inference needs later: Gamma^ per coefficient
/// and the long-memory constants.
struct ModelFile {
    FittedVCM fit;
    std::vector<std::string> covariates;
    std::vector<Eigen::MatrixXd> gamma;
    double alpha = 1.0;
    double pi_alpha = 1.0;
    std::optional<TruncationSelection> selection;

    VarianceModel variance_model(std::size_t l) const;
};

Json model_to_json(const ModelFile& m);
/// Throws ConfigError when the document is not a model file.
ModelFile model_from_json(const Json& j);

/// Plan from the config: the fixed plan, or the LOOCV choice over the grid.
/// The second member is set when a search ran.
std::pair<TruncationPlan, std::optional<TruncationSelection>> choose_plan(const Dataset& data,
                                                                          const AnalysisConfig& cfg,
                                                                          const DesignDensity& h);

struct FitResult {
    ModelFile model;
    std::vector<double> grid;
    std::string curve_csv;  ///< columns l, t, estimate
};

FitResult run_fit(const LoadedData& data, const AnalysisConfig& cfg);

/// `points` has columns l (1-based), t and optionally beta0 (default 0).
/// Output columns: l, t, beta0, estimate, se, lower, upper, statistic,
/// p_value, reject.
std::string run_infer(const ModelFile& model, const CsvTable& points, double level);

struct BandsResult {
    TruncationPlan plan;
    CoefficientBands bands;
    std::string csv;  ///< columns l, t, lower, estimate, upper
};

BandsResult run_bands(const LoadedData& data, const AnalysisConfig& cfg);

struct ModelScore {
    std::string model;
    std::string sample;  ///< train, test or full
    std::string tuning;
    double parameters = 0.0;
    Eigen::Index n = 0;
    Eigen::Index skipped = 0;
    double mse = 0.0;
    double r2 = 0.0;
    double aic = 0.0;
};

struct CompareResult {
    std::vector<ModelScore> scores;
    std::string report_csv;     ///< model, sample, tuning, parameters, n, skipped, mse, r2, aic
    std::string residuals_csv;  ///< model, sample, t, fitted, residual
    std::string qq_csv;         ///< model, sample, rank, probability, normal_quantile, residual
};

/// Fits GL, local linear and constant-coefficient linear regression on the
/// training rows and scores the train, test and full samples. Without a
/// split every row trains and only the full sample is reported.
CompareResult run_compare(const LoadedData& data, const AnalysisConfig& cfg);

/// Columns: n, coefficients, method, replications, replications_used,
/// failures, mise, mise_se, tuning_1, tuning_2, skipped_points.
std::string run_simulate(const SimulateConfig& cfg);

/// Minimal SVG with one panel per entry of `panels`; each panel holds
/// one or more curves over a shared x grid.
struct Panel {
    std::string title;
    std::vector<double> x;
    std::vector<std::vector<double>> curves;
};
std::string render_svg(const std::vector<Panel>& panels);

} // namespace lagvcm::cli
