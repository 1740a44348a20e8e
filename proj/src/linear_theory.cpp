#include "deteq/linear_theory.hpp"

#include "deteq/errors.hpp"
#include "deteq/reduce.hpp"

#include <cmath>
#include <string>

namespace deteq {

namespace {

void require_linear(const SpectralModel& model, const char* op) {
    if (model.kind() != ModelKind::linear)
        throw DomainError(std::string(op) + ": model kind must be linear");
}

void check_df2(double df2, long n, const char* op) {
    if (df2 >= static_cast<double>(n))
        throw NumericError(std::string(op) + ": degenerate variance, df2 = " +
                           std::to_string(df2) + " >= n = " + std::to_string(n));
}

void check_minnorm_band(long d, long n, const char* op) {
    const double gap = std::abs(1.0 - static_cast<double>(d) / static_cast<double>(n));
    if (gap < kThresholdBand)
        throw ThresholdError(std::string(op) + ": d = " + std::to_string(d) + ", n = " +
                             std::to_string(n) + " inside the threshold band");
}

} // namespace

BiasVariance risk_linear(const SpectralModel& model, long n, double lambda) {
    require_linear(model, "risk_linear");
    if (!(lambda > 0.0)) throw DomainError("risk_linear: lambda must be positive");
    const double ls = solve_lambda_star(model, n, lambda).primal;
    const auto df = model.degrees_of_freedom(ls);
    check_df2(df.df2, n, "risk_linear");
    const auto q = model.quad_forms(ls);
    const double nn = static_cast<double>(n);
    BiasVariance bv;
    bv.bias = ls * ls * q.q_lam_inv2 / (1.0 - df.df2 / nn);
    bv.variance = model.noise_var() * df.df2 / (nn - df.df2);
    return bv;
}

BiasVariance norm_linear(const SpectralModel& model, long n, double lambda) {
    require_linear(model, "norm_linear");
    if (!(lambda > 0.0)) throw DomainError("norm_linear: lambda must be positive");
    const double ls = solve_lambda_star(model, n, lambda).primal;
    const auto df = model.degrees_of_freedom(ls);
    check_df2(df.df2, n, "norm_linear");
    const auto q = model.quad_forms(ls);
    const double nn = static_cast<double>(n);
    const double tr_shift = model.trace_shift_inv2(ls);
    const double risk_bias = ls * ls * q.q_lam_inv2 / (1.0 - df.df2 / nn);
    BiasVariance bv;
    bv.bias = q.q_lam2_inv2 + tr_shift / nn * risk_bias;
    bv.variance = model.noise_var() * tr_shift / (nn - df.df2);
    return bv;
}

BiasVariance risk_linear_minnorm(const SpectralModel& model, long n, long d) {
    require_linear(model, "risk_linear_minnorm");
    if (n < 1 || d < 1) throw DomainError("risk_linear_minnorm: n, d must be >= 1");
    check_minnorm_band(d, n, "risk_linear_minnorm");
    if (model.is_finite_rank() && static_cast<long>(model.rank()) != d)
        throw DomainError("risk_linear_minnorm: d must equal the model rank");
    if (model.is_power_law() && d < n)
        throw DomainError("risk_linear_minnorm: an unbounded spectrum cannot be "
                          "under-parameterized; use an explicit finite model");
    const double nn = static_cast<double>(n);
    const double dd = static_cast<double>(d);
    BiasVariance bv;
    if (d < n) {
        bv.bias = 0.0;
        bv.variance = model.noise_var() * dd / (nn - dd);
        return bv;
    }
    const double ln = solve_ridgeless_level(model, n);
    const auto df = model.degrees_of_freedom(ln);
    check_df2(df.df2, n, "risk_linear_minnorm");
    const auto q = model.quad_forms(ln);
    bv.bias = ln * ln * q.q_lam_inv2 / (1.0 - df.df2 / nn);
    bv.variance = model.noise_var() * df.df2 / (nn - df.df2);
    return bv;
}

BiasVariance norm_linear_minnorm(const SpectralModel& model, long n, long d) {
    require_linear(model, "norm_linear_minnorm");
    if (n < 1 || d < 1) throw DomainError("norm_linear_minnorm: n, d must be >= 1");
    check_minnorm_band(d, n, "norm_linear_minnorm");
    if (model.is_finite_rank() && static_cast<long>(model.rank()) != d)
        throw DomainError("norm_linear_minnorm: d must equal the model rank");
    if (model.is_power_law() && d < n)
        throw DomainError("norm_linear_minnorm: an unbounded spectrum cannot be "
                          "under-parameterized; use an explicit finite model");
    const double nn = static_cast<double>(n);
    const double dd = static_cast<double>(d);
    BiasVariance bv;
    if (d < n) {
        // trace_inverse throws for power-law spectra, where Tr(S^-1) diverges.
        const double tr_inv = model.trace_inverse();
        bv.bias = model.coeff_norm_sq();
        bv.variance = model.noise_var() * tr_inv / (nn - dd);
        return bv;
    }
    const double ln = solve_ridgeless_level(model, n);
    const auto q = model.quad_forms(ln);
    bv.bias = q.q_lam_inv1;
    bv.variance = model.noise_var() / ln;
    return bv;
}

std::pair<double, double> psi_functionals(const SpectralModel& model, long n,
                                          double lambda, const Weight& weight) {
    require_linear(model, "psi_functionals");
    if (!(lambda > 0.0)) throw DomainError("psi_functionals: lambda must be positive");
    const double ls = solve_lambda_star(model, n, lambda).primal;
    const auto df = model.degrees_of_freedom(ls);
    check_df2(df.df2, n, "psi_functionals");
    const double nn = static_cast<double>(n);

    double psi1 = 0.0, tr2 = 0.0; // Tr(A S (S+ls)^-1), Tr(A S^2 (S+ls)^-2)
    switch (weight.kind()) {
        case Weight::Kind::identity:
            psi1 = df.df1;
            tr2 = df.df2;
            break;
        case Weight::Kind::target_projector: {
            const auto q = model.quad_forms(ls);
            psi1 = q.q_lam_inv1;
            tr2 = q.q_lam2_inv2;
            break;
        }
        case Weight::Kind::diagonal: {
            if (model.is_power_law())
                throw DomainError("psi_functionals: diagonal weights need an explicit spectrum");
            const auto& w = weight.values();
            const auto& eig = model.eigenvalues();
            if (w.size() != eig.size())
                throw DomainError("psi_functionals: weight length mismatch");
            NeumaierSum s1, s2;
            for (std::size_t k = 0; k < eig.size(); ++k) {
                const double q = eig[k] / (eig[k] + ls);
                s1.add(w[k] * q);
                s2.add(w[k] * q * q);
            }
            psi1 = s1.value();
            tr2 = s2.value();
            break;
        }
    }
    return {psi1, tr2 / nn / (nn - df.df2)};
}

double rho_lambda(const SpectralModel& model, long n, double lambda, double eta_star) {
    if (!(lambda > 0.0)) throw DomainError("rho_lambda: lambda must be positive");
    if (!(eta_star > 0.0 && eta_star < 0.5))
        throw DomainError("rho_lambda: eta_star must lie in (0, 1/2)");
    const double nn = static_cast<double>(n);
    std::size_t k = static_cast<std::size_t>(eta_star * nn);
    if (k < 1) k = 1;
    if (model.is_finite_rank() && k > model.rank()) return 1.0; // sigma_k = 0 past the rank
    const double sigma_k = model.eigenvalue(k);
    const double r_k = model.eigenvalue_tail_sum(k) / sigma_k;
    const double rv = std::max(r_k, nn);
    return 1.0 + nn * sigma_k / lambda * (1.0 + rv / nn * std::log(rv));
}

} // namespace deteq
