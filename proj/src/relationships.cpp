#include "deteq/relationships.hpp"

#include "deteq/errors.hpp"
#include "deteq/fixed_point.hpp"
#include "deteq/reduce.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace deteq {

namespace {
constexpr double kPi = std::numbers::pi;
} // namespace

double isotropic_ridge_residual(long d, double beta_sq, double sigma2, double lambda,
                                double risk, double norm) {
    const double dd = static_cast<double>(d);
    const double B = beta_sq;
    const double t1 = (B - risk - norm) * (B + risk - norm) * (B + risk - norm) * dd;
    const double t2 = 2.0 * B * ((B + risk - norm) * (B + risk - norm) - 4.0 * B * risk) * lambda;
    const double t3 = 2.0 * ((risk - norm) * (risk - norm) - B * B) * dd * sigma2;
    return t1 + t2 - t3;
}

double isotropic_ridge_residual_scale(long d, double beta_sq, double sigma2,
                                      double lambda, double risk, double norm) {
    const double dd = static_cast<double>(d);
    const double B = beta_sq;
    const double t1 = std::abs((B - risk - norm) * (B + risk - norm) * (B + risk - norm) * dd);
    const double t2 =
        std::abs(2.0 * B * ((B + risk - norm) * (B + risk - norm) - 4.0 * B * risk) * lambda);
    const double t3 = std::abs(2.0 * ((risk - norm) * (risk - norm) - B * B) * dd * sigma2);
    return std::max({t1, t2, t3, 1e-300});
}

double minnorm_isotropic_risk_from_norm(double beta_sq, double sigma2, double norm,
                                        ParamRegime regime) {
    if (regime == ParamRegime::under) {
        if (norm < beta_sq)
            throw DomainError("minnorm_isotropic_risk_from_norm: under-parameterized "
                              "norm cannot fall below |b|^2");
        return norm - beta_sq;
    }
    const double shift = norm - (beta_sq - sigma2);
    return std::sqrt(shift * shift + 4.0 * beta_sq * sigma2) - sigma2;
}

LinearLaw underparam_linear_law(const SpectralModel& model, long d) {
    if (model.is_finite_rank() && static_cast<long>(model.rank()) != d)
        throw DomainError("underparam_linear_law: d must equal the model rank");
    const double tr_inv = model.trace_inverse(); // throws when divergent
    LinearLaw law;
    law.slope = static_cast<double>(d) / tr_inv;
    law.intercept = -law.slope * model.coeff_norm_sq();
    return law;
}

LinearLaw rfm_overparam_line(const SpectralModel& model, long n) {
    if (model.kind() != ModelKind::rfm)
        throw DomainError("rfm_overparam_line: model kind must be rfm");
    const double ln = solve_ridgeless_level(model, n); // errors when n >= rank
    const auto q = model.quad_forms(ln);
    const auto df = model.degrees_of_freedom(ln);
    const double nn = static_cast<double>(n);
    const double sigma2 = model.noise_var();
    LinearLaw law;
    law.slope = ln;
    law.intercept = (nn * ln * ln * q.q_inv2 + sigma2 * df.df2) / (nn - df.df2) -
                    ln * q.q_inv1 - sigma2;
    return law;
}

FiniteRankUnderparam::FiniteRankUnderparam(long m, long n, double theta_sq, double sigma2)
    : m_(static_cast<double>(m)),
      n_(static_cast<double>(n)),
      theta_sq_(theta_sq),
      sigma2_(sigma2) {
    if (!(n < m)) throw DomainError("rfm_finite_rank_underparam: requires n < m");
}

double FiniteRankUnderparam::variance_hyperbola_residual(double vr, double vn) const {
    return vr * vr - (m_ - n_) / n_ * vr * vn - m_ * sigma2_ / n_ * vn;
}

LinearLaw FiniteRankUnderparam::variance_asymptote() const {
    LinearLaw law;
    law.slope = (m_ - n_) / n_;
    law.intercept = m_ * sigma2_ / (m_ - n_);
    return law;
}

double FiniteRankUnderparam::bias_identity_residual(double br, double bn) const {
    const double t = theta_sq_;
    const double lhs = bn * (m_ - n_) * (m_ * br - n_ * t) * (m_ * br * br - n_ * t * t);
    const double rhs =
        n_ * m_ * (br - t) * (br - t) * (m_ * br * br + n_ * t * br - 2.0 * n_ * t * t);
    return lhs - rhs;
}

FiniteRankUnderparam rfm_finite_rank_underparam(long m, long n, double theta_sq,
                                                double sigma2) {
    return FiniteRankUnderparam(m, n, theta_sq, sigma2);
}

PowerLawConstants power_law_constants(double alpha, double r) {
    if (!(alpha > 1.0)) throw DomainError("power_law_constants: alpha must exceed 1");
    if (!(r > 0.0)) throw DomainError("power_law_constants: r must be positive");
    if (std::abs(r - 0.5) < 1e-12)
        throw DomainError("power_law_constants: r = 1/2 is a formula pole");
    if (std::abs(r - 1.0) < 1e-12)
        throw DomainError("power_law_constants: r = 1 is a formula pole");

    PowerLawConstants c;
    const double sa = std::sin(kPi / alpha);
    c.c1 = kPi / (alpha * sa);
    c.c2 = kPi * (alpha - 1.0) / (alpha * alpha * sa);

    if (r < 0.5) {
        const double s2r = std::sin(2.0 * kPi * r);
        c.c3 = {kPi / (alpha * s2r), 0.0};
        c.c4 = {2.0 * kPi * r / (alpha * s2r), 0.0};
    } else {
        // Past r = 1/2 the forms converge to zeta-type constants that the
        // integral test only brackets; expose midpoint and half width.
        const double lo = 1.0 / (alpha * (2.0 * r - 1.0));
        c.c3 = {lo + 0.5, 0.5};
        c.c4 = {lo + 0.5, 0.5};
    }

    if (r < 1.0) {
        // <t, (L + nu)^-2 t> ~ c5 nu^(2r-2); Beta-integral closed form,
        // continuous through r = 1/2 and equal to c3 - c4 below it.
        c.c5 = Bracketed{std::tgamma(2.0 * r) * std::tgamma(2.0 - 2.0 * r) / alpha, 0.0};
    } else {
        const double lo = 1.0 / (2.0 * alpha * (r - 1.0));
        c.c6 = Bracketed{lo + 0.5, 0.5};
    }
    return c;
}

PowerLawRelation power_law_relation(double alpha, double r, long n,
                                    PowerLawRegime regime, double sigma2) {
    const PowerLawConstants c = power_law_constants(alpha, r);
    const double nn = static_cast<double>(n);
    const double slope = std::pow(nn / c.c1, -alpha);

    PowerLawRelation rel;
    rel.law.slope = slope;
    if (r < 0.5) {
        const double scale = std::pow(nn / c.c1, -2.0 * alpha * r);
        if (regime == PowerLawRegime::over) {
            rel.bias_offset = scale * (c.c2 * c.c3.value - c.c1 * c.c4.value) / (c.c1 - c.c2);
            rel.source = "bias offset (c2 c3 - c1 c4)/(c1 - c2), over-parameterized, r < 1/2";
        } else {
            rel.bias_offset =
                scale * (2.0 * c.c1 * c.c3.value - c.c2 * c.c3.value - c.c1 * c.c4.value) /
                (c.c1 - c.c2);
            rel.source =
                "bias offset (2 c1 c3 - c2 c3 - c1 c4)/(c1 - c2), p -> n-, r < 1/2";
        }
        rel.bias_offset_half_width = 0.0;
    } else {
        const double sgn = regime == PowerLawRegime::over ? -1.0 : 1.0;
        rel.bias_offset = sgn * slope * c.c4.value;
        rel.bias_offset_half_width = slope * c.c4.half_width;
        rel.source = regime == PowerLawRegime::over
                         ? "bias offset -c4 (n/c1)^-alpha, over-parameterized, r > 1/2"
                         : "bias offset +c4 (n/c1)^-alpha, p -> n-, r > 1/2";
    }
    rel.noise_offset_coeff = regime == PowerLawRegime::over ? alpha - 2.0 : alpha;
    rel.law.intercept = rel.bias_offset + sigma2 * rel.noise_offset_coeff;
    return rel;
}

ScalingExponents scaling_exponents(double alpha, double r, double q, double ell) {
    if (!(alpha > 1.0)) throw DomainError("scaling_exponents: alpha must exceed 1");
    if (!(r > 0.0 && r < 0.5))
        throw DomainError("scaling_exponents: r must lie in (0, 1/2)");
    if (!(q >= 0.0 && ell >= 0.0))
        throw DomainError("scaling_exponents: q and ell must be >= 0");

    const double ell_split = alpha / (2.0 * alpha * r + 1.0);
    const double q_split = 1.0 / (2.0 * alpha * r + 1.0);
    const double eps = 1e-9;

    ScalingExponents se;
    se.boundary = std::abs(ell - alpha) < eps || std::abs(q - 1.0) < eps ||
                  std::abs(q - ell / alpha) < eps || std::abs(ell - ell_split) < eps ||
                  std::abs(q - q_split) < eps;

    if (ell >= alpha && q >= 1.0) {
        se.region = 1;
        se.gamma_n = -alpha;
        se.gamma_N = 1.0;
    } else if (q >= ell / alpha && ell < alpha && ell >= ell_split) {
        se.region = 2;
        se.gamma_n = -ell;
        se.gamma_N = 1.0;
    } else if (q >= ell / alpha && ell < ell_split) {
        se.region = 4;
        se.gamma_n = -1.0;
        se.gamma_N = 1.0;
    } else if (q < ell / alpha && q < 1.0 && q >= q_split) {
        se.region = 3;
        se.gamma_n = -alpha / (alpha + 1.0);
        se.gamma_N = 1.0 / (alpha + 1.0);
    } else if (q < ell / alpha && q < q_split) {
        se.region = 5;
        se.gamma_n = 0.0;
        se.gamma_N = -2.0 * r / (1.0 - 2.0 * r);
    } else {
        // q < ell/alpha with q >= 1 forces ell > alpha, already region 1.
        se.region = 1;
        se.gamma_n = -alpha;
        se.gamma_N = 1.0;
    }
    return se;
}

PowerLawLinearRelations::PowerLawLinearRelations(int beta, long d, double sigma2)
    : beta_(beta), d_(static_cast<double>(d)), sigma2_(sigma2) {
    if (beta != -1 && beta != 0 && beta != 1)
        throw DomainError("powerlaw_linear_bias_relations: beta must be -1, 0, or 1");
    if (d < 1) throw DomainError("powerlaw_linear_bias_relations: d must be >= 1");
    trace_ = reduce::sum_blocked(static_cast<std::size_t>(d), [](std::size_t k) {
        return 1.0 / static_cast<double>(k);
    });
}

double PowerLawLinearRelations::bias_residual(double br, double bn) const {
    switch (beta_) {
        case 0:
            return br - 2.0 * bn * (d_ - bn) / (d_ * d_);
        case 1: {
            const double num = 2.0 * (bn - trace_);
            const double den = d_ * std::sqrt(1.0 + 2.0 * bn - 2.0 * trace_);
            return br - num / den;
        }
        default: { // beta = -1
            const double b2 = bn * bn;
            const double num = 216.0 * b2 * b2 - 324.0 * d_ * d_ * bn * b2 +
                               126.0 * std::pow(d_, 4.0) * b2 + std::pow(d_, 6.0) * bn -
                               5.0 * std::pow(d_, 8.0);
            const double den = 2.0 * std::pow(d_, 5.0) * (6.0 * bn - d_ * d_);
            return br - num / den;
        }
    }
}

double PowerLawLinearRelations::variance_residual(double vr, double vn) const {
    return vr - 2.0 * vn * vn / (d_ * vn - d_ * d_ * sigma2_);
}

PowerLawLinearRelations powerlaw_linear_bias_relations(int beta, long d, double sigma2) {
    return PowerLawLinearRelations(beta, d, sigma2);
}

} // namespace deteq
