#ifndef DETEQ_RELATIONSHIPS_HPP
#define DETEQ_RELATIONSHIPS_HPP

#include "deteq/spectral_model.hpp"

#include <optional>
#include <string>

namespace deteq {

struct LinearLaw {
    double slope = 0.0;
    double intercept = 0.0;
    double predict(double norm) const { return slope * norm + intercept; }
    double residual(double risk, double norm) const { return risk - predict(norm); }
};

/// Residual of the cubic identity tying the isotropic ridge risk R and
/// norm N at dimension d, ridge lambda, |b|^2 = beta_sq:
///   (B - R - N)(B + R - N)^2 d + 2B[(B + R - N)^2 - 4 B R] lambda
///     - 2[(R - N)^2 - B^2] d sigma^2,   B := beta_sq.
/// Zero (to rounding) on any (R, N) pair produced by the linear theory
/// on an isotropic model.
double isotropic_ridge_residual(long d, double beta_sq, double sigma2, double lambda,
                                double risk, double norm);

/// Scale of the three residual terms above, for relative comparisons.
double isotropic_ridge_residual_scale(long d, double beta_sq, double sigma2,
                                      double lambda, double risk, double norm);

enum class ParamRegime { under, over };

/// Ridgeless isotropic risk as a function of the norm:
///   under:  R = N - |b|^2            (requires N >= |b|^2)
///   over:   R = sqrt((N - (|b|^2 - s^2))^2 + 4 |b|^2 s^2) - s^2
double minnorm_isotropic_risk_from_norm(double beta_sq, double sigma2, double norm,
                                        ParamRegime regime);

/// Under-parameterized ridgeless linear law R = d (N - |b|^2) / Tr(S^-1):
/// slope d / Tr(S^-1), intercept -slope |b|^2.
LinearLaw underparam_linear_law(const SpectralModel& model, long d);

/// Over-parameterized ridgeless RFM line R = lambda_n N + intercept with
///   intercept = [n lambda_n^2 q_inv2 + sigma^2 df2] / (n - df2)
///               - lambda_n q_inv1 - sigma^2
/// (everything at lambda_n); an exact identity of the equivalents,
/// independent of p.
LinearLaw rfm_overparam_line(const SpectralModel& model, long n);

/// Under-parameterized finite-rank isotropic relations (L = I_m, p < n):
/// the variance hyperbola, its asymptote, and the degree-4 bias identity.
class FiniteRankUnderparam {
public:
    FiniteRankUnderparam(long m, long n, double theta_sq, double sigma2);

    /// V_R^2 - (m-n)/n V_R V_N - m sigma^2 / n V_N
    double variance_hyperbola_residual(double vr, double vn) const;
    /// V_R = (m-n)/n V_N + m sigma^2 / (m-n)
    LinearLaw variance_asymptote() const;
    /// B_N (m-n)(m B_R - n t)(m B_R^2 - n t^2)
    ///   - n m (B_R - t)^2 (m B_R^2 + n t B_R - 2 n t^2),  t := theta_sq
    double bias_identity_residual(double br, double bn) const;

private:
    double m_, n_, theta_sq_, sigma2_;
};

FiniteRankUnderparam rfm_finite_rank_underparam(long m, long n, double theta_sq,
                                                double sigma2);

/// A constant that is either a closed form (half_width = 0) or the
/// midpoint of a two-sided bound with the stated half width.
struct Bracketed {
    double value = 0.0;
    double half_width = 0.0;
};

/// The power-law integral-approximation constants.
///   c1 = pi / (alpha sin(pi/alpha)),  c2 = pi (alpha-1) / (alpha^2 sin(pi/alpha))
///   r in (0, 1/2):  c3 = pi / (alpha sin(2 pi r)),  c4 = 2 pi r / (alpha sin(2 pi r))
///   r  > 1/2:       c3 = c4 bracketed in (1/(alpha(2r-1)), 1/(alpha(2r-1)) + 1)
///   r in (0, 1):    c5 = Gamma(2r) Gamma(2-2r) / alpha (closed form; equals c3 - c4
///                   below 1/2); absent for r >= 1
///   r  > 1:         c6 bracketed in (1/(2 alpha (r-1)), 1/(2 alpha (r-1)) + 1);
///                   absent below
/// r = 1/2 and r = 1 are formula poles and rejected.
struct PowerLawConstants {
    double c1 = 0.0;
    double c2 = 0.0;
    Bracketed c3, c4;
    std::optional<Bracketed> c5, c6;
};

PowerLawConstants power_law_constants(double alpha, double r);

enum class PowerLawRegime { over, under_near_threshold };

/// Ridgeless power-law risk-norm line R ~ (n/c1)^-alpha N + intercept.
/// The intercept splits into a bias offset (per r-regime) plus
/// sigma2 * noise_offset_coeff with coefficient alpha - 2 (over) or
/// alpha (under, p -> n-). source names the assembled display.
struct PowerLawRelation {
    LinearLaw law;
    double bias_offset = 0.0;
    double noise_offset_coeff = 0.0;
    double bias_offset_half_width = 0.0;
    std::string source;
};

PowerLawRelation power_law_relation(double alpha, double r, long n,
                                    PowerLawRegime regime, double sigma2 = 0.0);

/// Scaling-law exponents: R = Theta(n^gamma_n N^gamma_N) for p = n^q,
/// lambda = n^-(ell-1), r in (0, 1/2). Regions:
///   1: ell > alpha, q > 1                       -> (-alpha, 1)
///   2: alpha/(2 alpha r + 1) < ell < alpha, q > ell/alpha -> (-ell, 1)
///   3: 1/(2 alpha r + 1) < q < 1, q < ell/alpha -> (-alpha/(alpha+1), 1/(alpha+1))
///   4: ell < alpha/(2 alpha r + 1), q > ell/alpha -> (-1, 1)
///   5: q < 1/(2 alpha r + 1), q < ell/alpha     -> (0, -2r/(1-2r))
struct ScalingExponents {
    double gamma_n = 0.0;
    double gamma_N = 0.0;
    int region = 0;
    bool boundary = false;
};

ScalingExponents scaling_exponents(double alpha, double r, double q, double ell);

/// alpha = 1 linear ridgeless special cases (d > n, n -> d): residual
/// evaluators for the three bias relations (beta in {-1, 0, 1}) and the
/// variance relation V_R ~ 2 V_N^2 / (d V_N - d^2 sigma^2).
class PowerLawLinearRelations {
public:
    PowerLawLinearRelations(int beta, long d, double sigma2);

    double bias_residual(double br, double bn) const;
    double variance_residual(double vr, double vn) const;
    int beta() const { return beta_; }

private:
    int beta_;
    double d_;
    double sigma2_;
    double trace_; // harmonic number H_d, used by the beta = 1 display
};

PowerLawLinearRelations powerlaw_linear_bias_relations(int beta, long d, double sigma2);

} // namespace deteq

#endif
