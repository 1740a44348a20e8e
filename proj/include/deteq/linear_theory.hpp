#ifndef DETEQ_LINEAR_THEORY_HPP
#define DETEQ_LINEAR_THEORY_HPP

#include "deteq/fixed_point.hpp"
#include "deteq/spectral_model.hpp"

#include <utility>
#include <vector>

namespace deteq {

struct BiasVariance {
    double bias = 0.0;
    double variance = 0.0;
    double total() const { return bias + variance; }
};

/// Weight matrix for the trace functionals, restricted to the shapes the
/// equivalents actually need: diagonal in the eigenbasis, or the
/// rank-one projector onto the target coefficients.
class Weight {
public:
    enum class Kind { identity, diagonal, target_projector };

    static Weight identity() { return Weight(Kind::identity, {}); }
    static Weight diagonal(std::vector<double> values) {
        return Weight(Kind::diagonal, std::move(values));
    }
    static Weight target_projector() { return Weight(Kind::target_projector, {}); }

    Kind kind() const { return kind_; }
    const std::vector<double>& values() const { return values_; }

private:
    Weight(Kind k, std::vector<double> v) : kind_(k), values_(std::move(v)) {}
    Kind kind_;
    std::vector<double> values_;
};

/// Deterministic equivalents of the linear ridge test risk:
///   bias = lambda*^2 <b, S (S + lambda*)^-2 b> / (1 - df2/n)
///   variance = sigma^2 df2 / (n - df2)
BiasVariance risk_linear(const SpectralModel& model, long n, double lambda);

/// Deterministic equivalents of the squared estimator norm:
///   bias = <b, S^2 (S + lambda*)^-2 b> + Tr(S (S+lambda*)^-2)/n * risk_bias
///   variance = sigma^2 Tr(S (S + lambda*)^-2) / (n - df2)
BiasVariance norm_linear(const SpectralModel& model, long n, double lambda);

/// Ridgeless (min-norm) risk. d < n: (0, sigma^2 d/(n-d)).
/// d > n: the lambda_n formulas with df1(lambda_n) = n.
BiasVariance risk_linear_minnorm(const SpectralModel& model, long n, long d);

/// Ridgeless (min-norm) squared norm. d < n: (|b|^2, sigma^2 Tr(S^-1)/(n-d)).
/// d > n: (<b, S (S+lambda_n)^-1 b>, sigma^2 / lambda_n).
BiasVariance norm_linear_minnorm(const SpectralModel& model, long n, long d);

/// The deterministic sides of the non-asymptotic trace functionals:
///   Psi1 = Tr(A S (S + lambda*)^-1)
///   Psi2 = (1/n) Tr(A S^2 (S + lambda*)^-2) / (n - df2)
std::pair<double, double> psi_functionals(const SpectralModel& model, long n,
                                          double lambda, const Weight& weight);

/// rho_lambda(n) = 1 + n sigma_k / lambda * {1 + (r(k) v n)/n * log(r(k) v n)}
/// at k = floor(eta_star n) (clamped to >= 1), where r(k) is the intrinsic
/// dimension tail_sum(k)/sigma_k; returns 1 when k exceeds the rank.
double rho_lambda(const SpectralModel& model, long n, double lambda, double eta_star);

} // namespace deteq

#endif
