#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "deteq/errors.hpp"
#include "deteq/fixed_point.hpp"

#include <cmath>
#include <numbers>
#include <vector>

using namespace deteq;

namespace {

SpectralModel isotropic(std::size_t d, ModelKind kind = ModelKind::rfm) {
    std::vector<double> eig(d, 1.0);
    std::vector<double> coef(d, std::sqrt(1.0 / static_cast<double>(d)));
    return SpectralModel::finite(eig, coef, 0.0, kind);
}

double isotropic_lambda_star(double d, double n, double l) {
    return (d + l - n + std::sqrt(4.0 * l * n + (n - d - l) * (n - d - l))) / (2.0 * n);
}

} // namespace

TEST_CASE("lambda_star matches the isotropic closed form") {
    for (long d : {20L, 100L, 500L}) {
        const auto m = isotropic(static_cast<std::size_t>(d), ModelKind::linear);
        for (long n : {30L, 150L, 400L}) {
            for (double l : {0.01, 1.0, 50.0}) {
                const auto sol = solve_lambda_star(m, n, l);
                const double closed = isotropic_lambda_star(
                    static_cast<double>(d), static_cast<double>(n), l);
                CHECK(std::abs(sol.primal - closed) <= 1e-10 * closed);
                CHECK(sol.residual <= 1e-8);
            }
        }
    }
}

TEST_CASE("ridgeless lambda_star dispatch") {
    const auto m = isotropic(200, ModelKind::linear);
    // d = 2n: level solves d/(1+nu) = n, so nu = 1
    const auto over = solve_lambda_star(m, 100, 0.0);
    CHECK(over.regime == Regime::over);
    CHECK(over.primal == doctest::Approx(1.0).epsilon(1e-12));
    // d < n returns zero exactly
    const auto under = solve_lambda_star(m, 400, 0.0);
    CHECK(under.regime == Regime::under);
    CHECK(under.primal == 0.0);
    // threshold band
    CHECK_THROWS_AS(solve_lambda_star(m, 200, 0.0), ThresholdError);
    CHECK_THROWS_AS(solve_lambda_star(isotropic(1000, ModelKind::linear), 1001, 0.0),
                    ThresholdError);
}

TEST_CASE("lambda_star tends to lambda/n for huge ridge") {
    const auto m = isotropic(50, ModelKind::linear);
    const long n = 100;
    const double l = 1e9;
    const auto sol = solve_lambda_star(m, n, l);
    CHECK(sol.primal * n / l == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("nu pair on the finite-rank isotropic models") {
    const auto m = isotropic(200);
    // over-parameterized ridgeless: lambda_n = (m-n)/n, nu1 = nu2 (1 - n/p)
    const auto over = solve_nu_pair(m, 50, 100, 0.0);
    CHECK(over.primal == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(over.companion.value() == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(over.regime == Regime::over);
    // under-parameterized ridgeless: nu2 = lambda_p = (m-p)/p, nu1 = 0
    const auto under = solve_nu_pair(m, 100, 50, 0.0);
    CHECK(under.primal == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(under.companion.value() == 0.0);
    CHECK(under.regime == Regime::under);
    CHECK_THROWS_AS(solve_nu_pair(m, 100, 100, 0.0), ThresholdError);
}

TEST_CASE("nu pair satisfies both self-consistent equations") {
    const auto pl = SpectralModel::power_law(1.5, 0.4, 0.01);
    for (long n : {50L, 100L}) {
        for (long p : {30L, 75L, 150L, 300L}) {
            for (double l : {1e-6, 1e-3, 1.0}) {
                const auto sol = solve_nu_pair(pl, n, p, l);
                const double nu2 = sol.primal;
                const double nu1 = sol.companion.value();
                const double df1 = pl.degrees_of_freedom(nu2).df1;
                const double r1 = std::abs(n - l / nu1 - df1);
                const double r2 = std::abs(p - p * nu1 / nu2 - df1);
                CHECK(r1 <= 1e-8);
                CHECK(r2 <= 1e-8);
            }
        }
    }
}

TEST_CASE("nu pair: ridge at vanishing lambda meets the ridgeless branch") {
    const auto pl = SpectralModel::power_law(1.5, 0.4, 0.01);
    for (long p : {50L, 200L}) {
        const auto ridge = solve_nu_pair(pl, 100, p, 1e-10);
        const auto level = solve_nu_pair(pl, 100, p, 0.0);
        CHECK(std::abs(ridge.primal - level.primal) <= 1e-6 * level.primal);
    }
}

TEST_CASE("ridgeless level") {
    const auto m = isotropic(500);
    CHECK(solve_ridgeless_level(m, 100) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK_THROWS_AS(solve_ridgeless_level(isotropic(100), 100), DomainError);
    CHECK_THROWS_AS(solve_ridgeless_level(isotropic(100), 150), DomainError);
    // power law: level approaches (count / C1)^-alpha
    const auto pl = SpectralModel::power_law(2.0, 0.25, 0.0);
    const double c1 = std::numbers::pi / (2.0 * std::sin(std::numbers::pi / 2.0));
    const double level = solve_ridgeless_level(pl, 100);
    const double approx = std::pow(100.0 / c1, -2.0);
    CHECK(std::abs(level - approx) <= 0.03 * approx);
    CHECK(std::abs(pl.degrees_of_freedom(level).df1 - 100.0) <= 1e-10);
}

TEST_CASE("upsilon and chi") {
    const auto m = isotropic(200);
    const auto uc = upsilon_chi(m, 50, 100, 1.5, 3.0);
    CHECK(uc.upsilon == doctest::Approx(4.0 / 7.0).epsilon(1e-12));
    CHECK(uc.chi == doctest::Approx(1.0 / 7.0).epsilon(1e-12));

    // nu1 = 0 collapses Upsilon to p/n
    const auto uc0 = upsilon_chi(m, 100, 50, 0.0, 3.0);
    CHECK(uc0.upsilon == doctest::Approx(0.5).epsilon(1e-12));

    // nu1 = nu2 with df2 -> 0 sends Upsilon to 0
    const auto far = upsilon_chi(m, 50, 100, 1e7, 1e7);
    CHECK(far.upsilon < 1e-6);

    // p <= df2 is singular
    CHECK_THROWS_AS(upsilon_chi(m, 50, 1, 0.5, 1e-6), NumericError);
}
