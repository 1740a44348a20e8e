#include "deteq/rfm_theory.hpp"

#include "deteq/errors.hpp"

#include <cmath>
#include <string>

namespace deteq {

namespace {

void require_rfm(const SpectralModel& model, const char* op) {
    if (model.kind() != ModelKind::rfm)
        throw DomainError(std::string(op) + ": model kind must be rfm");
}

void check_minnorm_band(long p, long n, const char* op) {
    const double gap = std::abs(1.0 - static_cast<double>(p) / static_cast<double>(n));
    if (gap < kThresholdBand)
        throw ThresholdError(std::string(op) + ": p = " + std::to_string(p) + ", n = " +
                             std::to_string(n) + " inside the threshold band");
}

} // namespace

namespace detail {

RfmEquivalents rfm_from_fixed_point(const SpectralModel& model, long n, long p,
                                    const FixedPointSolution& fp) {
    const double nu2 = fp.primal;
    const double nu1 = fp.companion.value();
    RfmEquivalents out;
    out.fixed_point = fp;
    out.uc = upsilon_chi(model, n, p, nu1, nu2);
    out.df2 = model.degrees_of_freedom(nu2).df2;
    const double ups = out.uc.upsilon;
    const double chi = out.uc.chi;
    if (ups >= 1.0)
        throw NumericError("rfm equivalents: Upsilon = " + std::to_string(ups) +
                           " >= 1 at (n = " + std::to_string(n) + ", p = " +
                           std::to_string(p) + ", lambda-induced nu2 = " +
                           std::to_string(nu2) + "); equivalents undefined");
    const auto q = model.quad_forms(nu2);
    const double nn = static_cast<double>(n);
    const double pp = static_cast<double>(p);
    const double sigma2 = model.noise_var();

    out.risk.bias = nu2 * nu2 * (q.q_inv2 + chi * q.q_lam_inv2) / (1.0 - ups);
    out.risk.variance = sigma2 * ups / (1.0 - ups);

    out.norm.bias = pp * q.q_lam_inv2 / (pp - out.df2) + pp * chi / nn * out.risk.bias;
    // p chi/(n Upsilon) * risk variance, written without the 0/0 at sigma2 = 0.
    out.norm.variance = pp * chi / nn * sigma2 / (1.0 - ups);
    return out;
}

} // namespace detail

RfmEquivalents rfm_equivalents(const SpectralModel& model, long n, long p, double lambda) {
    require_rfm(model, "rfm_equivalents");
    if (!(lambda > 0.0)) throw DomainError("rfm_equivalents: lambda must be positive");
    const FixedPointSolution fp = solve_nu_pair(model, n, p, lambda);
    return detail::rfm_from_fixed_point(model, n, p, fp);
}

BiasVariance risk_rfm(const SpectralModel& model, long n, long p, double lambda) {
    return rfm_equivalents(model, n, p, lambda).risk;
}

BiasVariance norm_rfm(const SpectralModel& model, long n, long p, double lambda) {
    return rfm_equivalents(model, n, p, lambda).norm;
}

BiasVariance risk_rfm_minnorm(const SpectralModel& model, long n, long p) {
    require_rfm(model, "risk_rfm_minnorm");
    if (n < 1 || p < 1) throw DomainError("risk_rfm_minnorm: n, p must be >= 1");
    check_minnorm_band(p, n, "risk_rfm_minnorm");
    const double nn = static_cast<double>(n);
    const double pp = static_cast<double>(p);
    const double sigma2 = model.noise_var();
    BiasVariance bv;
    if (p < n) {
        const double lp = solve_ridgeless_level(model, p);
        const auto q = model.quad_forms(lp);
        bv.bias = nn * lp * q.q_inv1 / (nn - pp);
        bv.variance = sigma2 * pp / (nn - pp);
        return bv;
    }
    const double ln = solve_ridgeless_level(model, n);
    const auto q = model.quad_forms(ln);
    const double df2 = model.degrees_of_freedom(ln).df2;
    bv.bias = nn * ln * ln * q.q_inv2 / (nn - df2) + nn * ln * q.q_inv1 / (pp - nn);
    bv.variance = sigma2 * df2 / (nn - df2) + sigma2 * nn / (pp - nn);
    return bv;
}

BiasVariance norm_rfm_minnorm(const SpectralModel& model, long n, long p) {
    require_rfm(model, "norm_rfm_minnorm");
    if (n < 1 || p < 1) throw DomainError("norm_rfm_minnorm: n, p must be >= 1");
    check_minnorm_band(p, n, "norm_rfm_minnorm");
    const double nn = static_cast<double>(n);
    const double pp = static_cast<double>(p);
    const double sigma2 = model.noise_var();
    BiasVariance bv;
    if (p < n) {
        const double lp = solve_ridgeless_level(model, p);
        const auto q = model.quad_forms(lp);
        const double df2 = model.degrees_of_freedom(lp).df2;
        bv.bias = pp * q.q_lam_inv2 / (nn - df2) + pp * q.q_inv1 / (nn - pp);
        bv.variance = sigma2 * pp / (lp * (nn - pp));
        return bv;
    }
    const double ln = solve_ridgeless_level(model, n);
    const auto q = model.quad_forms(ln);
    bv.bias = pp * q.q_inv1 / (pp - nn);
    bv.variance = sigma2 * pp / (ln * (pp - nn));
    return bv;
}

} // namespace deteq
