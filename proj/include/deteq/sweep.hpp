#ifndef DETEQ_SWEEP_HPP
#define DETEQ_SWEEP_HPP

#include "deteq/linear_theory.hpp"
#include "deteq/relationships.hpp"
#include "deteq/spectral_model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace deteq {

enum class OutputFormat { csv, json };

struct ModelConfig {
    ModelKind kind = ModelKind::rfm;
    enum class Spectrum { powerlaw, decay, isotropic, file } spectrum = Spectrum::powerlaw;
    double alpha = 0.0;     // powerlaw / decay eigenvalue exponent
    double r = 0.0;         // powerlaw source exponent
    double coeff_exp = 0.0; // decay coefficient exponent
    double beta_sq = 1.0;   // isotropic total squared coefficient mass
    double sigma2 = 0.0;
    double tail_tol = 1e-8;
    long dim = 0;           // decay / isotropic rank
    std::string path;       // spectrum file

    bool operator==(const ModelConfig&) const = default;
};

SpectralModel build_model(const ModelConfig& mc);

/// Sweep over gamma (p/n for rfm at fixed n; d/n for linear at fixed d)
/// or over lambda at fixed gamma.
struct SweepConfig {
    ModelConfig model;
    enum class Variable { gamma, lambda } variable = Variable::gamma;
    long n = 0;
    double lambda = 0.0; // fixed lambda for gamma sweeps (0 = ridgeless)
    double gamma = 0.0;  // fixed gamma for lambda sweeps
    double min = 0.0;
    double max = 0.0;
    long count = 0;
    bool log_scale = false;
    std::vector<double> values; // explicit grid; overrides min/max/count
    bool sim_enabled = false;
    long trials = 100;
    std::uint64_t seed = 0;
    long truncation = 0;
    OutputFormat format = OutputFormat::csv;
    std::string out_path;

    bool operator==(const SweepConfig&) const = default;
};

SweepConfig parse_sweep_config(const std::string& text);
std::string to_string(const SweepConfig& cfg);

struct CurvePoint {
    double gamma = 0.0;
    long n = 0;
    long dim = 0;
    double lambda = 0.0;
    std::string regime;
    bool has_theory = false;
    BiasVariance risk_th, norm_th;
    bool has_emp = false;
    double risk_emp = 0.0, risk_se = 0.0, norm_emp = 0.0, norm_se = 0.0;
    long trials = 0;
    std::uint64_t seed = 0;
    std::string flags;
};

/// Pinned CSV schema (golden-tested): changing it is a format break.
extern const char* const kCurveCsvHeader;

std::vector<CurvePoint> run_sweep(const SweepConfig& cfg);
std::string curve_table_csv(const std::vector<CurvePoint>& points);
std::string curve_table_json(const std::vector<CurvePoint>& points);

/// Scaling-law table: per (q, ell) sample, the region, tabled exponents,
/// and exponents fitted from log-log slopes of the theory outputs along
/// an n-grid of powers of two with p = n^q, lambda = n^-(ell-1).
struct ScalingConfig {
    double alpha = 2.0;
    double r = 0.25;
    double sigma2 = 1.0;
    double tail_tol = 1e-8;
    int n_min_log2 = 8;
    int n_max_log2 = 12;
    struct Sample {
        double q = 0.0;
        double ell = 0.0;
        bool operator==(const Sample&) const = default;
    };
    std::vector<Sample> samples;
    OutputFormat format = OutputFormat::csv;
    std::string out_path;

    bool operator==(const ScalingConfig&) const = default;
};

ScalingConfig parse_scaling_config(const std::string& text);
std::string to_string(const ScalingConfig& cfg);

struct ScalingRow {
    double q = 0.0, ell = 0.0;
    int region = 0;
    bool boundary = false;
    double gamma_n = 0.0, gamma_N = 0.0;
    double fitted_gamma_n = 0.0, fitted_gamma_N = 0.0;
    double slope_risk = 0.0, slope_norm = 0.0; // d log R / d log n, d log N / d log n
};

extern const char* const kScalingCsvHeader;

std::vector<ScalingRow> run_scaling(const ScalingConfig& cfg);
std::string scaling_table_csv(const std::vector<ScalingRow>& rows);
std::string scaling_table_json(const std::vector<ScalingRow>& rows);

/// Single-point report: fixed point, theory bias/variance pairs, and the
/// relationship residuals applicable to the model.
std::string diagnose_report(const SpectralModel& model, long n, long dim, double lambda);

/// Fixed-point-only report.
std::string fixed_point_report(const SpectralModel& model, long n, long dim, double lambda);

/// Least-squares slope of y against x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

} // namespace deteq

#endif
