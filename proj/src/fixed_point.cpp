#include "deteq/fixed_point.hpp"

#include "deteq/errors.hpp"

#include <cmath>
#include <string>

namespace deteq {

namespace {

constexpr int kMaxIter = 200;

struct Root {
    double x;
    int iterations;
};

// Bisection for a strictly decreasing g with g(lo) >= 0 >= g(hi),
// run to relative interval width rel_tol (or kMaxIter halvings).
template <typename G>
Root bisect_decreasing(G&& g, double lo, double hi, double rel_tol) {
    double glo = g(lo);
    double ghi = g(hi);
    if (!(glo >= 0.0 && ghi <= 0.0))
        throw NumericError("bisection: bracket does not straddle a sign change");
    int it = 0;
    while (it < kMaxIter) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break; // interval at floating-point resolution
        const double gm = g(mid);
        if (gm >= 0.0)
            lo = mid, glo = gm;
        else
            hi = mid, ghi = gm;
        ++it;
        if (hi - lo <= rel_tol * std::abs(mid)) break;
    }
    Root r;
    r.x = std::abs(glo) <= std::abs(ghi) ? lo : hi;
    r.iterations = it;
    return r;
}

void check_threshold(long dim, long n, const char* what) {
    const double gap = std::abs(static_cast<double>(dim - n)) / static_cast<double>(n);
    if (gap < kThresholdBand)
        throw ThresholdError(std::string(what) +
                             ": interpolation threshold, |dim - n|/n = " + std::to_string(gap) +
                             " inside the guard band");
}

} // namespace

double solve_ridgeless_level(const SpectralModel& model, long count) {
    if (count < 1) throw DomainError("solve_ridgeless_level: count must be >= 1");
    const double target = static_cast<double>(count);
    if (model.is_finite_rank() && static_cast<double>(model.rank()) <= target)
        throw DomainError("solve_ridgeless_level: df1 stays below count, count >= rank (" +
                          std::to_string(model.rank()) + ")");

    // df1(nu) decreases from rank (or infinity) to 0, so f(nu) = df1 - count
    // is decreasing. Upper start from df1(nu) <= Tr / nu.
    auto f = [&](double nu) { return model.degrees_of_freedom(nu).df1 - target; };
    double hi = 2.0 * model.trace() / target;
    for (int i = 0; i < 200 && f(hi) > 0.0; ++i) hi *= 2.0;
    double lo = hi;
    while (lo > 1e-300 && f(lo) < 0.0) lo *= 0.5;
    if (f(lo) < 0.0) throw NumericError("solve_ridgeless_level: no lower bracket found");

    Root r = bisect_decreasing(f, lo, hi, 1e-15);
    const double residual = std::abs(f(r.x));
    if (residual > 1e-10)
        throw NumericError("solve_ridgeless_level: residual " + std::to_string(residual) +
                           " above the 1e-10 contract");
    return r.x;
}

FixedPointSolution solve_lambda_star(const SpectralModel& model, long n, double lambda) {
    if (n < 1) throw DomainError("solve_lambda_star: n must be >= 1");
    if (lambda < 0.0) throw DomainError("solve_lambda_star: lambda must be >= 0");

    FixedPointSolution sol;
    if (lambda == 0.0) {
        if (model.is_finite_rank()) {
            const long d = static_cast<long>(model.rank());
            check_threshold(d, n, "solve_lambda_star");
            if (d < n) {
                sol.primal = 0.0;
                sol.residual = 0.0;
                sol.regime = Regime::under;
                return sol;
            }
        }
        sol.primal = solve_ridgeless_level(model, n);
        sol.residual = std::abs(model.degrees_of_freedom(sol.primal).df1 - static_cast<double>(n));
        sol.regime = Regime::over;
        return sol;
    }

    // f(t) = lambda/t + df1(t) - n is strictly decreasing; the bracket
    // [lambda/n, (lambda + Tr)/n] always straddles its root.
    const double nn = static_cast<double>(n);
    auto f = [&](double t) { return lambda / t + model.degrees_of_freedom(t).df1 - nn; };
    const double lo = lambda / nn;
    const double hi = (lambda + model.trace()) / nn;
    Root r = bisect_decreasing(f, lo, hi, 1e-13);
    sol.primal = r.x;
    sol.iterations = r.iterations;
    sol.residual = std::abs(nn - lambda / r.x - model.degrees_of_freedom(r.x).df1);
    sol.regime = Regime::ridge;
    return sol;
}

FixedPointSolution solve_nu_pair(const SpectralModel& model, long n, long p, double lambda) {
    if (n < 1 || p < 1) throw DomainError("solve_nu_pair: n and p must be >= 1");
    if (lambda < 0.0) throw DomainError("solve_nu_pair: lambda must be >= 0");
    const double nn = static_cast<double>(n);
    const double pp = static_cast<double>(p);

    FixedPointSolution sol;
    if (lambda == 0.0) {
        check_threshold(p, n, "solve_nu_pair");
        if (p < n) {
            sol.primal = solve_ridgeless_level(model, p); // lambda_p
            sol.companion = 0.0;
            sol.residual = std::abs(model.degrees_of_freedom(sol.primal).df1 - pp);
            sol.regime = Regime::under;
        } else {
            sol.primal = solve_ridgeless_level(model, n); // lambda_n
            sol.companion = sol.primal * (1.0 - nn / pp);
            sol.residual = std::abs(model.degrees_of_freedom(sol.primal).df1 - nn);
            sol.regime = Regime::over;
        }
        return sol;
    }

    // g(nu2) = 1 + n/p - sqrt((1 - n/p)^2 + 4 lambda / (p nu2))
    //          - (2/p) df1(nu2)
    // is strictly increasing: negative near 0, positive for large nu2.
    const double ratio = 1.0 - nn / pp;
    auto g = [&](double nu2) {
        return 1.0 + nn / pp - std::sqrt(ratio * ratio + 4.0 * lambda / (pp * nu2)) -
               2.0 / pp * model.degrees_of_freedom(nu2).df1;
    };
    const double lambda_scale = std::max(lambda / nn, 1e-300);
    double hi = lambda_scale + model.trace() / static_cast<double>(std::min(n, p));
    for (int i = 0; i < 200 && g(hi) < 0.0; ++i) hi *= 2.0;
    if (g(hi) < 0.0) throw NumericError("solve_nu_pair: no upper bracket for nu2");
    double lo = std::min(1e-16 * lambda_scale, hi * 0.5);
    for (int i = 0; i < 200 && g(lo) > 0.0; ++i) lo *= 0.5;
    if (g(lo) > 0.0) throw NumericError("solve_nu_pair: no lower bracket for nu2");

    Root r = bisect_decreasing([&](double x) { return -g(x); }, lo, hi, 1e-15);
    const double nu2 = r.x;
    const double root = std::sqrt(ratio * ratio + 4.0 * lambda / (pp * nu2));
    // nu1 = (nu2/2)(ratio + root); for ratio <= 0 the direct form cancels
    // catastrophically, so use (root^2 - ratio^2)/(root - ratio) instead.
    const double nu1 = ratio > 0.0 ? 0.5 * nu2 * (ratio + root)
                                   : 2.0 * lambda / (pp * (root - ratio));

    sol.primal = nu2;
    sol.companion = nu1;
    sol.iterations = r.iterations;
    const double df1 = model.degrees_of_freedom(nu2).df1;
    const double res1 = std::abs(nn - lambda / nu1 - df1);
    const double res2 = std::abs(pp - pp * nu1 / nu2 - df1);
    sol.residual = std::max(res1, res2);
    sol.regime = Regime::ridge;
    return sol;
}

UpsilonChi upsilon_chi(const SpectralModel& model, long n, long p, double nu1, double nu2) {
    if (!(nu2 > 0.0)) throw DomainError("upsilon_chi: nu2 must be positive");
    if (n < 1 || p < 1) throw DomainError("upsilon_chi: n and p must be >= 1");
    const double df2 = model.degrees_of_freedom(nu2).df2;
    const double pp = static_cast<double>(p);
    if (pp <= df2)
        throw NumericError("upsilon_chi: p <= df2(nu2), singular denominator (p = " +
                           std::to_string(p) + ", df2 = " + std::to_string(df2) + ")");
    const double s = nu1 / nu2;
    UpsilonChi uc;
    uc.upsilon = pp / static_cast<double>(n) *
                 ((1.0 - s) * (1.0 - s) + s * s * df2 / (pp - df2));
    uc.chi = model.trace_shift_inv2(nu2) / (pp - df2);
    return uc;
}

} // namespace deteq
