#ifndef DETEQ_RFM_THEORY_HPP
#define DETEQ_RFM_THEORY_HPP

#include "deteq/fixed_point.hpp"
#include "deteq/linear_theory.hpp"
#include "deteq/spectral_model.hpp"

namespace deteq {

/// One full evaluation of the random-features equivalents at (n, p,
/// lambda): the fixed point, the (Upsilon, chi) pair, and the risk and
/// norm decompositions. risk_rfm / norm_rfm are thin views of this, so
/// the risk embedded in the norm rescaling is the same computation
/// bit for bit.
struct RfmEquivalents {
    FixedPointSolution fixed_point;
    UpsilonChi uc;
    double df2 = 0.0;
    BiasVariance risk;
    BiasVariance norm;
};

RfmEquivalents rfm_equivalents(const SpectralModel& model, long n, long p, double lambda);

/// Test-risk equivalents (lambda > 0):
///   bias = nu2^2 [q_inv2 + chi q_lam_inv2] / (1 - Upsilon)
///   variance = sigma^2 Upsilon / (1 - Upsilon)
BiasVariance risk_rfm(const SpectralModel& model, long n, long p, double lambda);

/// Norm equivalents (lambda > 0):
///   bias = p q_lam_inv2 / (p - df2) + (p chi / n) risk_bias
///   variance = (p chi / (n Upsilon)) risk_variance
BiasVariance norm_rfm(const SpectralModel& model, long n, long p, double lambda);

/// Ridgeless risk: the lambda_p branch for p < n, the lambda_n branch
/// for p > n.
BiasVariance risk_rfm_minnorm(const SpectralModel& model, long n, long p);

/// Ridgeless norm. Under-parameterized bias uses the denominator
/// n - df2(lambda_p) exactly as stated, not p - df2.
BiasVariance norm_rfm_minnorm(const SpectralModel& model, long n, long p);

namespace detail {
/// Equivalents from an externally supplied fixed point; rfm_equivalents
/// feeds the solved pair through here.
RfmEquivalents rfm_from_fixed_point(const SpectralModel& model, long n, long p,
                                    const FixedPointSolution& fp);
} // namespace detail

} // namespace deteq

#endif
