#ifndef DETEQ_FIXED_POINT_HPP
#define DETEQ_FIXED_POINT_HPP

#include "deteq/spectral_model.hpp"

#include <optional>

namespace deteq {

/// Width of the guard band around the interpolation threshold: ridgeless
/// solves with |dim - n| / n below this refuse to evaluate.
inline constexpr double kThresholdBand = 1e-3;

enum class Regime { under, over, ridge };

/// Solved effective regularization. primal is lambda_star for linear
/// ridge and nu2 for random features; companion holds nu1 when present.
struct FixedPointSolution {
    double primal = 0.0;
    std::optional<double> companion;
    double residual = 0.0;
    int iterations = 0;
    Regime regime = Regime::ridge;
};

/// Effective regularization of linear ridge: the root of
/// n - lambda / t = Tr(S (S + t)^-1). lambda = 0 dispatches on the
/// regime: rank < n returns 0 exactly, rank > n returns the level
/// lambda_n with df1(lambda_n) = n.
FixedPointSolution solve_lambda_star(const SpectralModel& model, long n, double lambda);

/// Effective regularization pair (nu1, nu2) of random-features ridge:
///   n - lambda/nu1 = Tr(L (L + nu2)^-1) = p - p nu1 / nu2.
/// Solved through the single-variable nu2 equation (left side increasing
/// in nu2, right side decreasing), then nu1 recovered in closed form.
/// lambda = 0 dispatches: p < n gives nu1 = 0, nu2 = lambda_p; p > n
/// gives nu2 = lambda_n, nu1 = nu2 (1 - n/p).
FixedPointSolution solve_nu_pair(const SpectralModel& model, long n, long p, double lambda);

/// Unique nu > 0 with df1(nu) = count, to 1e-10 absolute residual.
/// Errors when count reaches the rank of a finite model.
double solve_ridgeless_level(const SpectralModel& model, long count);

struct UpsilonChi {
    double upsilon = 0.0;
    double chi = 0.0;
};

/// The two scalars controlling the RFM variance and norm rescaling:
///   Upsilon = (p/n) [ (1 - nu1/nu2)^2 + (nu1/nu2)^2 df2 / (p - df2) ]
///   chi     = Tr(L (L + nu2)^-2) / (p - df2)
/// with df2 = df2(nu2). Errors when p <= df2 (singular denominator).
UpsilonChi upsilon_chi(const SpectralModel& model, long n, long p, double nu1, double nu2);

} // namespace deteq

#endif
