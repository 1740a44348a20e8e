#ifndef DETEQ_SIMULATOR_HPP
#define DETEQ_SIMULATOR_HPP

#include "deteq/linear_theory.hpp"
#include "deteq/reduce.hpp"
#include "deteq/spectral_model.hpp"

#include <cstdint>

namespace deteq {

struct SimConfig {
    long n = 0;
    long d_or_p = 0;       // d for linear, p for random features
    double lambda = 0.0;   // 0 selects the pseudoinverse (min-norm) solve
    long truncation = 0;   // RFM ambient dimension K; 0 picks 10 max(n, p)
    long trials = 1;
    std::uint64_t seed = 0;
};

struct EmpiricalStats {
    reduce::MeanSE risk_bias, risk_var, risk_total;
    reduce::MeanSE norm_bias, norm_var, norm_total;
    long trials_used = 0;
};

/// Gaussian linear-regression trials: X = T S^(1/2) with standard normal
/// T, and the noise integrated analytically, so each trial reports the
/// exact-in-noise bias/variance of risk and norm:
///   B_R = l^2 <b, (C+l)^-1 S (C+l)^-1 b>    V_R = s^2 Tr(S C (C+l)^-2)
///   B_N = <b, C^2 (C+l)^-2 b>               V_N = s^2 Tr(C (C+l)^-2)
/// (C = X^T X). lambda = 0 uses the pseudoinverse with a singular-value
/// cutoff of max-dim * eps * largest singular value.
///
/// Trials run as independent tasks on streams derived from (seed, trial);
/// the reduction happens in trial order after collection, so the result
/// is bit-identical for any parallel schedule.
EmpiricalStats simulate_linear(const SpectralModel& model, const SimConfig& cfg);

/// Random-features trials: G n x K standard normal, F p x K with row
/// covariance L_K, Z = G F^T / sqrt(p):
///   B_N = <t, G^T Z (Z^T Z + l)^-2 Z^T G t>   V_N = s^2 Tr(Z^T Z (Z^T Z+l)^-2)
///   B_R = |t - p^-1/2 F^T (Z^T Z+l)^-1 Z^T G t|^2
///   V_R = s^2 Tr((F F^T / p)(Z^T Z+l)^-1 Z^T Z (Z^T Z+l)^-1)
EmpiricalStats simulate_rfm(const SpectralModel& model, const SimConfig& cfg);

struct PhiValues {
    double phi1 = 0.0;
    double phi2 = 0.0;
    double phi3 = 0.0;
    double phi4 = 0.0;
};

/// The four random trace functionals on a single sampled X:
///   Phi1 = Tr(A S^1/2 (C+l)^-1 S^1/2)      Phi2 = Tr(A C (C+l)^-1)
///   Phi3 = Tr(A S^1/2 (C+l)^-1 S (C+l)^-1 S^1/2)
///   Phi4 = Tr(A S^1/2 (C+l)^-1 (C/n) (C+l)^-1 S^1/2)
/// for a finite model; pairs with psi_functionals for convergence checks.
PhiValues empirical_phi(const SpectralModel& model, long n, double lambda,
                        const Weight& weight, std::uint64_t seed);

/// Phi2 alone for several weights on one shared draw; this is the cheap
/// path the convergence-trend checks drive at larger n.
std::vector<double> empirical_phi2(const SpectralModel& model, long n, double lambda,
                                   const std::vector<Weight>& weights,
                                   std::uint64_t seed);

namespace detail {
/// Counter-derived per-trial stream: trial t of a run seeded s draws from
/// an engine seeded with splitmix64 applied to (s, t).
std::uint64_t trial_seed(std::uint64_t seed, long trial);
} // namespace detail

} // namespace deteq

#endif
