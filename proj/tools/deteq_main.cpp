#include "deteq/errors.hpp"
#include "deteq/sweep.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDomain = 3;
constexpr int kExitNumeric = 4;

std::string slurp(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw deteq::ConfigError("cannot open config file: " + path);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

void emit(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw deteq::ConfigError("cannot open output file: " + path);
    os << text;
}

struct PointArgs {
    std::string config;
    long n = 0;
    long dim = 0;
    double lambda = 0.0;
};

deteq::SpectralModel model_from_config(const std::string& path) {
    const deteq::SweepConfig cfg = deteq::parse_sweep_config(slurp(path));
    return deteq::build_model(cfg.model);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"deterministic equivalents for ridge and random-features regression"};
    app.require_subcommand(1);

    // sweep
    auto* sweep = app.add_subcommand("sweep", "theory (and optional Monte Carlo) curve table");
    std::string sweep_config, sweep_out, sweep_format;
    bool sim_on = false, sim_off = false;
    long sweep_trials = -1;
    std::uint64_t sweep_seed = 0;
    bool sweep_seed_set = false;
    sweep->add_option("--config", sweep_config, "sweep config file")->required();
    sweep->add_option("--out", sweep_out, "output path (default: from config or stdout)");
    sweep->add_option("--format", sweep_format, "csv or json (overrides config)");
    sweep->add_flag("--sim", sim_on, "enable simulation columns");
    sweep->add_flag("--no-sim", sim_off, "disable simulation columns");
    sweep->add_option("--trials", sweep_trials, "Monte Carlo trials (overrides config)");
    sweep->add_option("--seed", sweep_seed, "base seed (overrides config)")
        ->each([&](const std::string&) { sweep_seed_set = true; });

    // scaling
    auto* scaling = app.add_subcommand("scaling", "scaling-law exponent table");
    std::string scaling_config, scaling_out, scaling_format;
    scaling->add_option("--config", scaling_config, "scaling config file")->required();
    scaling->add_option("--out", scaling_out, "output path");
    scaling->add_option("--format", scaling_format, "csv or json (overrides config)");

    // diagnose
    auto* diagnose = app.add_subcommand("diagnose", "single-point report");
    PointArgs diag;
    diagnose->add_option("--config", diag.config, "config file providing [model]")->required();
    diagnose->add_option("--n", diag.n, "sample count")->required();
    diagnose->add_option("--dim", diag.dim, "d (linear) or p (rfm)")->required();
    diagnose->add_option("--lambda", diag.lambda, "ridge parameter (0 = min-norm)");

    // fixed-point
    auto* fixed = app.add_subcommand("fixed-point", "effective regularization only");
    PointArgs fp;
    fixed->add_option("--config", fp.config, "config file providing [model]")->required();
    fixed->add_option("--n", fp.n, "sample count")->required();
    fixed->add_option("--dim", fp.dim, "d (linear) or p (rfm)")->required();
    fixed->add_option("--lambda", fp.lambda, "ridge parameter (0 = ridgeless)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (sweep->parsed()) {
            deteq::SweepConfig cfg = deteq::parse_sweep_config(slurp(sweep_config));
            if (sim_on && sim_off)
                throw deteq::ConfigError("--sim and --no-sim are mutually exclusive");
            if (sim_on) cfg.sim_enabled = true;
            if (sim_off) cfg.sim_enabled = false;
            if (sweep_trials >= 0) cfg.trials = sweep_trials;
            if (sweep_seed_set) cfg.seed = sweep_seed;
            if (!sweep_format.empty())
                cfg.format = sweep_format == "json" ? deteq::OutputFormat::json
                             : sweep_format == "csv"
                                 ? deteq::OutputFormat::csv
                                 : throw deteq::ConfigError("--format must be csv or json");
            if (!sweep_out.empty()) cfg.out_path = sweep_out;
            const auto points = deteq::run_sweep(cfg);
            const std::string text = cfg.format == deteq::OutputFormat::csv
                                         ? deteq::curve_table_csv(points)
                                         : deteq::curve_table_json(points);
            emit(text, cfg.out_path);
        } else if (scaling->parsed()) {
            deteq::ScalingConfig cfg = deteq::parse_scaling_config(slurp(scaling_config));
            if (!scaling_format.empty())
                cfg.format = scaling_format == "json" ? deteq::OutputFormat::json
                             : scaling_format == "csv"
                                 ? deteq::OutputFormat::csv
                                 : throw deteq::ConfigError("--format must be csv or json");
            if (!scaling_out.empty()) cfg.out_path = scaling_out;
            const auto rows = deteq::run_scaling(cfg);
            const std::string text = cfg.format == deteq::OutputFormat::csv
                                         ? deteq::scaling_table_csv(rows)
                                         : deteq::scaling_table_json(rows);
            emit(text, cfg.out_path);
        } else if (diagnose->parsed()) {
            const deteq::SpectralModel model = model_from_config(diag.config);
            std::cout << deteq::diagnose_report(model, diag.n, diag.dim, diag.lambda);
        } else if (fixed->parsed()) {
            const deteq::SpectralModel model = model_from_config(fp.config);
            std::cout << deteq::fixed_point_report(model, fp.n, fp.dim, fp.lambda);
        }
    } catch (const deteq::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const deteq::ThresholdError& e) {
        std::cerr << "threshold error: " << e.what() << "\n";
        return kExitDomain;
    } catch (const deteq::DomainError& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return kExitDomain;
    } catch (const deteq::NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return kExitNumeric;
    }
    return 0;
}
