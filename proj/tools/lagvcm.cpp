#include "lagvcm/cli/commands.hpp"
#include "lagvcm/cli/config.hpp"
#include "lagvcm/cli/csv.hpp"
#include "lagvcm/error.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace lagvcm;
using namespace lagvcm::cli;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

void emit(const std::optional<fs::path>& path, const std::string& text) {
    if (path) write_file_atomic(*path, text);
    else std::cout << text;
}

AnalysisConfig analysis_config(const std::optional<fs::path>& path) {
    return parse_analysis_config(read_json_file(path));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Laguerre-series varying-coefficient models"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "lagvcm 1.0");

    std::optional<fs::path> config, data, output, model_path, curve, svg, points, residuals, qq;
    std::optional<double> level;
    bool print_config = false;

    auto common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config, "JSON config file");
        sub->add_flag("--print-config", print_config, "print the effective config and exit");
    };

    CLI::App* simulate = app.add_subcommand("simulate", "run a Monte Carlo MISE scenario");
    common(simulate);
    simulate->add_option("-o,--output", output, "report CSV (default: stdout)");

    CLI::App* fit = app.add_subcommand("fit", "fit a model and sample the coefficient curves");
    common(fit);
    fit->add_option("-d,--data", data, "input CSV");
    fit->add_option("-m,--model", model_path, "fitted model JSON");
    fit->add_option("-o,--curve", curve, "curve CSV (default: stdout)");
    fit->add_option("--svg", svg, "optional SVG rendering of the curves");

    CLI::App* infer = app.add_subcommand("infer", "pointwise intervals and tests from a fitted model");
    common(infer);
    infer->add_option("-m,--model", model_path, "fitted model JSON")->required();
    infer->add_option("-p,--points", points, "CSV with columns l, t and optional beta0")->required();
    infer->add_option("-l,--level", level, "significance level (default from config)");
    infer->add_option("-o,--output", output, "result CSV (default: stdout)");

    CLI::App* bands = app.add_subcommand("bands", "bootstrap percentile bands");
    common(bands);
    bands->add_option("-d,--data", data, "input CSV");
    bands->add_option("-o,--output", output, "band CSV (default: stdout)");
    bands->add_option("--svg", svg, "optional SVG rendering of the bands");

    CLI::App* compare = app.add_subcommand("compare", "compare GL, local linear and linear regression");
    common(compare);
    compare->add_option("-d,--data", data, "input CSV");
    compare->add_option("-o,--output", output, "report CSV (default: stdout)");
    compare->add_option("--residuals", residuals, "residual CSV");
    compare->add_option("--qq", qq, "normal-quantile CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    auto need = [](const std::optional<fs::path>& p, const char* flag) -> const fs::path& {
        if (!p) throw ConfigError(std::string("missing required option ") + flag);
        return *p;
    };

    try {
        if (*simulate) {
            const SimulateConfig cfg = parse_simulate_config(read_json_file(config));
            if (print_config) {
                std::cout << to_json(cfg).dump(2) << '\n';
                return 0;
            }
            emit(output, run_simulate(cfg));
            return 0;
        }
        const AnalysisConfig cfg = analysis_config(config);
        if (print_config) {
            std::cout << to_json(cfg).dump(2) << '\n';
            return 0;
        }
        if (*fit) {
            const LoadedData loaded = load_dataset(need(data, "--data"), cfg.data);
            const FitResult result = run_fit(loaded, cfg);
            if (model_path) write_file_atomic(*model_path, model_to_json(result.model).dump(2) + "\n");
            emit(curve, result.curve_csv);
            if (svg) {
                std::vector<Panel> panels;
                for (std::size_t l = 0; l < result.model.fit.r(); ++l) {
                    Panel p{"beta_" + std::to_string(l + 1) + " (" + result.model.covariates[l] + ")", result.grid, {{}}};
                    for (double t : result.grid) p.curves[0].push_back(result.model.fit.coefficient(l, t));
                    panels.push_back(std::move(p));
                }
                write_file_atomic(*svg, render_svg(panels));
            }
        } else if (*infer) {
            const ModelFile model = model_from_json(read_json_file(*model_path));
            emit(output, run_infer(model, read_csv(*points), level.value_or(cfg.inference.level)));
        } else if (*bands) {
            const LoadedData loaded = load_dataset(need(data, "--data"), cfg.data);
            const BandsResult result = run_bands(loaded, cfg);
            emit(output, result.csv);
            if (svg) {
                std::vector<Panel> panels;
                for (Eigen::Index l = 0; l < result.bands.lower.rows(); ++l) {
                    Panel p{"beta_" + std::to_string(l + 1) + " (" + loaded.covariates[static_cast<std::size_t>(l)] + ")",
                            result.bands.t_grid, {}};
                    for (const Eigen::MatrixXd* m : {&result.bands.lower, &result.bands.estimate, &result.bands.upper}) {
                        const Eigen::VectorXd row = m->row(l);
                        p.curves.emplace_back(row.data(), row.data() + row.size());
                    }
                    panels.push_back(std::move(p));
                }
                write_file_atomic(*svg, render_svg(panels));
            }
        } else if (*compare) {
            const LoadedData loaded = load_dataset(need(data, "--data"), cfg.data);
            const CompareResult result = run_compare(loaded, cfg);
            emit(output, result.report_csv);
            if (residuals) write_file_atomic(*residuals, result.residuals_csv);
            if (qq) write_file_atomic(*qq, result.qq_csv);
        }
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "lagvcm: " << e.what() << '\n';
        return kExitConfig;
    } catch (const Error& e) {
        std::cerr << "lagvcm: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "lagvcm: " << e.what() << '\n';
        return 1;
    }
}
