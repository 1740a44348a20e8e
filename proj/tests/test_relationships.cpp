#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "deteq/errors.hpp"
#include "deteq/linear_theory.hpp"
#include "deteq/relationships.hpp"
#include "deteq/rfm_theory.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using namespace deteq;

namespace {

SpectralModel isotropic(std::size_t d, double beta_sq, double sigma2, ModelKind kind) {
    std::vector<double> eig(d, 1.0);
    std::vector<double> coef(d, std::sqrt(beta_sq / static_cast<double>(d)));
    return SpectralModel::finite(eig, coef, sigma2, kind);
}

SpectralModel decay_model(std::size_t d, double alpha, double cexp, double sigma2,
                          ModelKind kind) {
    std::vector<double> eig(d), coef(d);
    for (std::size_t k = 1; k <= d; ++k) {
        eig[k - 1] = std::pow(static_cast<double>(k), -alpha);
        coef[k - 1] = std::pow(static_cast<double>(k), -cexp);
    }
    return SpectralModel::finite(eig, coef, sigma2, kind);
}

} // namespace

TEST_CASE("isotropic cubic identity on ridge theory output") {
    const long d = 500, n = 300;
    const double beta_sq = 10.0, sigma2 = 1.0, lambda = 50.0;
    const auto m = isotropic(d, beta_sq, sigma2, ModelKind::linear);
    const double R = risk_linear(m, n, lambda).total();
    const double N = norm_linear(m, n, lambda).total();
    const double res = isotropic_ridge_residual(d, beta_sq, sigma2, lambda, R, N);
    const double scale = isotropic_ridge_residual_scale(d, beta_sq, sigma2, lambda, R, N);
    CHECK(std::abs(res) <= 1e-6 * scale);
    // lambda = d sigma^2 / |b|^2 is exactly 50 here: the optimal-ridge line
    CHECK(std::abs(R - (beta_sq - N)) <= 1e-8 * beta_sq);
    // an arbitrary mismatched pair does not satisfy the identity
    const double off = isotropic_ridge_residual(d, beta_sq, sigma2, lambda, R * 2.0, N);
    CHECK(std::abs(off) > 1e-3 * scale);
}

TEST_CASE("ridgeless isotropic risk from norm") {
    CHECK(minnorm_isotropic_risk_from_norm(10.0, 1.0, 15.0, ParamRegime::under) ==
          doctest::Approx(5.0));
    CHECK_THROWS_AS(minnorm_isotropic_risk_from_norm(10.0, 1.0, 9.0, ParamRegime::under),
                    DomainError);
    CHECK(minnorm_isotropic_risk_from_norm(10.0, 1.0, 9.0, ParamRegime::over) ==
          doctest::Approx(std::sqrt(40.0) - 1.0).epsilon(1e-12));
    CHECK(minnorm_isotropic_risk_from_norm(10.0, 0.0, 4.0, ParamRegime::over) ==
          doctest::Approx(6.0));
    // pipeline consistency in the over-parameterized regime
    const auto m = isotropic(400, 5.0, 0.25, ModelKind::linear);
    const double R = risk_linear_minnorm(m, 200, 400).total();
    const double N = norm_linear_minnorm(m, 200, 400).total();
    const double pred = minnorm_isotropic_risk_from_norm(5.0, 0.25, N, ParamRegime::over);
    CHECK(std::abs(R - pred) <= 1e-9 * R);
}

TEST_CASE("under-parameterized ridgeless linear law") {
    const auto iso = isotropic(200, 3.0, 0.1, ModelKind::linear);
    const auto law_iso = underparam_linear_law(iso, 200);
    CHECK(law_iso.slope == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(law_iso.intercept == doctest::Approx(-3.0).epsilon(1e-12));

    const auto dec = decay_model(1000, 1.0, 1.5, 4e-4, ModelKind::linear);
    const auto law = underparam_linear_law(dec, 1000);
    CHECK(law.slope == doctest::Approx(1000.0 / (1000.0 * 1001.0 / 2.0)).epsilon(1e-12));
    for (long n : {1500L, 2500L}) {
        const double R = risk_linear_minnorm(dec, n, 1000).total();
        const double N = norm_linear_minnorm(dec, n, 1000).total();
        CHECK(std::abs(law.residual(R, N)) <= 1e-8 * std::abs(R));
    }
    const auto pl = SpectralModel::power_law(1.5, 0.4, 0.0, 1e-8, ModelKind::linear);
    CHECK_THROWS_AS(underparam_linear_law(pl, 100), DomainError);
}

TEST_CASE("over-parameterized ridgeless line for random features") {
    const auto iso = isotropic(500, 1.0, 0.04, ModelKind::rfm);
    const auto line = rfm_overparam_line(iso, 100);
    CHECK(line.slope == doctest::Approx(4.0).epsilon(1e-10));
    CHECK(line.intercept == doctest::Approx(-0.03).epsilon(1e-9));

    const auto pl = SpectralModel::power_law(1.5, 0.4, 0.01);
    const auto pline = rfm_overparam_line(pl, 100);
    for (long p : {200L, 400L, 800L}) {
        const double R = risk_rfm_minnorm(pl, 100, p).total();
        const double N = norm_rfm_minnorm(pl, 100, p).total();
        CHECK(std::abs(pline.residual(R, N)) <= 1e-6 * std::abs(R));
    }
}

TEST_CASE("finite-rank under-parameterized relations") {
    const long m = 200, n = 100, p = 50;
    const double s2 = 0.04;
    const auto model = isotropic(m, 1.0, s2, ModelKind::rfm);
    const auto rel = rfm_finite_rank_underparam(m, n, 1.0, s2);

    const auto risk = risk_rfm_minnorm(model, n, p);
    const auto norm = norm_rfm_minnorm(model, n, p);
    const double vres = rel.variance_hyperbola_residual(risk.variance, norm.variance);
    const double vscale = risk.variance * risk.variance;
    CHECK(std::abs(vres) <= 1e-8 * vscale);
    const double bres = rel.bias_identity_residual(risk.bias, norm.bias);
    const double bscale = static_cast<double>(n) * static_cast<double>(m) *
                          std::pow(risk.bias + 1.0, 2.0) * risk.bias * risk.bias;
    CHECK(std::abs(bres) <= 1e-6 * bscale);

    // approach to the asymptote as the norm variance grows (p -> n-)
    const auto asym = rel.variance_asymptote();
    double prev_gap = std::numeric_limits<double>::infinity();
    for (long pp : {60L, 75L, 90L}) {
        const auto r = risk_rfm_minnorm(model, n, pp);
        const auto nn = norm_rfm_minnorm(model, n, pp);
        const double gap = std::abs(r.variance - asym.predict(nn.variance)) / r.variance;
        CHECK(gap < prev_gap);
        prev_gap = gap;
    }
    CHECK(prev_gap < 0.2);
    CHECK_THROWS_AS(rfm_finite_rank_underparam(100, 100, 1.0, 0.1), DomainError);
}

TEST_CASE("power-law constants") {
    const auto c2 = power_law_constants(2.0, 0.25);
    CHECK(c2.c1 == doctest::Approx(std::numbers::pi / 2.0).epsilon(1e-14));
    // pi (alpha-1) / (alpha^2 sin(pi/alpha)) at alpha = 2; this is the value
    // consistent with (alpha+1) - c2/(c1-c2) = 2
    CHECK(c2.c2 == doctest::Approx(std::numbers::pi / 4.0).epsilon(1e-14));
    CHECK(c2.c3.value == doctest::Approx(std::numbers::pi / 2.0).epsilon(1e-14));
    CHECK(c2.c4.value == doctest::Approx(std::numbers::pi / 4.0).epsilon(1e-14));
    CHECK(c2.c3.half_width == 0.0);
    CHECK(c2.c5.has_value());
    CHECK(!c2.c6.has_value());
    // c5 continues c3 - c4 below one half
    CHECK(c2.c5->value == doctest::Approx(c2.c3.value - c2.c4.value).epsilon(1e-12));

    for (double a : {1.1, 1.5, 2.0, 2.718281828, 3.7, 5.0, 7.5, 10.0}) {
        const auto c = power_law_constants(a, 0.25);
        CHECK(c.c1 > c.c2);
        CHECK(c.c2 > 0.0);
        const double diff = std::numbers::pi / (a * a * std::sin(std::numbers::pi / a));
        CHECK(std::abs(c.c1 - c.c2 - diff) <= 1e-12 * diff);
        CHECK(std::abs((a + 1.0) - c.c2 / (c.c1 - c.c2) - 2.0) <= 1e-12);
        CHECK(c.c3.value > c.c4.value);
        CHECK(c.c4.value > 0.0);
    }

    const auto cb = power_law_constants(2.0, 0.75);
    CHECK(cb.c3.half_width == 0.5);
    CHECK(cb.c3.value == doctest::Approx(1.0 / (2.0 * 0.5) + 0.5).epsilon(1e-12));
    CHECK(cb.c5.has_value());
    const auto cc = power_law_constants(2.0, 1.5);
    CHECK(cc.c6.has_value());
    CHECK(cc.c6->value == doctest::Approx(1.0 / (2.0 * 2.0 * 0.5) + 0.5).epsilon(1e-12));
    CHECK(!cc.c5.has_value());

    CHECK_THROWS_AS(power_law_constants(2.0, 0.5), DomainError);
    CHECK_THROWS_AS(power_law_constants(2.0, 1.0), DomainError);
    CHECK_THROWS_AS(power_law_constants(0.9, 0.25), DomainError);
}

TEST_CASE("power-law risk-norm relation") {
    const auto over = power_law_relation(2.0, 0.25, 200, PowerLawRegime::over, 0.01);
    const auto under =
        power_law_relation(2.0, 0.25, 200, PowerLawRegime::under_near_threshold, 0.01);
    CHECK(over.noise_offset_coeff == doctest::Approx(0.0)); // alpha - 2 at alpha = 2
    CHECK(under.noise_offset_coeff == doctest::Approx(2.0));
    CHECK(over.law.slope == under.law.slope);
    // the under-threshold constant always dominates the over constant
    for (double a : {1.5, 2.0, 3.0}) {
        for (double r : {0.2, 0.4, 0.75, 1.6}) {
            for (long n : {100L, 400L}) {
                const auto o = power_law_relation(a, r, n, PowerLawRegime::over, 0.01);
                const auto u = power_law_relation(a, r, n,
                                                  PowerLawRegime::under_near_threshold, 0.01);
                CHECK(o.law.intercept < u.law.intercept);
            }
        }
    }
    CHECK(!over.source.empty());
}

TEST_CASE("scaling exponent region map") {
    const double a = 2.0, r = 0.25;
    const auto r1 = scaling_exponents(a, r, 1.5, 3.2);
    CHECK(r1.region == 1);
    CHECK(r1.gamma_n == doctest::Approx(-2.0));
    CHECK(r1.gamma_N == doctest::Approx(1.0));
    const auto r2 = scaling_exponents(a, r, 1.5, 1.5);
    CHECK(r2.region == 2);
    CHECK(r2.gamma_n == doctest::Approx(-1.5));
    const auto r3 = scaling_exponents(a, r, 0.75, 2.5);
    CHECK(r3.region == 3);
    CHECK(r3.gamma_n == doctest::Approx(-2.0 / 3.0));
    CHECK(r3.gamma_N == doctest::Approx(1.0 / 3.0));
    const auto r4 = scaling_exponents(a, r, 0.6, 0.9);
    CHECK(r4.region == 4);
    CHECK(r4.gamma_n == doctest::Approx(-1.0));
    const auto r5 = scaling_exponents(a, r, 0.4, 1.9);
    CHECK(r5.region == 5);
    CHECK(r5.gamma_n == doctest::Approx(0.0));
    CHECK(r5.gamma_N == doctest::Approx(-1.0)); // -2r/(1-2r) at r = 1/4

    // totality over a seeded grid minus boundaries; gamma_n <= 0 throughout
    std::mt19937_64 eng(1234);
    std::uniform_real_distribution<double> u(0.0, 3.0 * a);
    for (int i = 0; i < 400; ++i) {
        const double q = u(eng), ell = u(eng);
        const auto se = scaling_exponents(a, r, q, ell);
        CHECK(se.region >= 1);
        CHECK(se.region <= 5);
        CHECK(se.gamma_n <= 0.0);
    }
    CHECK(scaling_exponents(a, r, 1.0, 3.0).boundary);
    CHECK(scaling_exponents(a, r, 0.5, 1.9).boundary);
    CHECK_THROWS_AS(scaling_exponents(a, 0.6, 1.0, 1.0), DomainError);
}

TEST_CASE("alpha = 1 special-case relations") {
    const long d = 400;
    const double sigma2 = 1e-3;
    const auto rel0 = powerlaw_linear_bias_relations(0, d, sigma2);
    // B_N = d/2 lands on B_R = 1/2
    CHECK(rel0.bias_residual(0.5, d / 2.0) == doctest::Approx(0.0).epsilon(1e-12));
    // V_N = 2 d s^2 lands on V_R = 8 s^2
    CHECK(rel0.variance_residual(8.0 * sigma2, 2.0 * d * sigma2) ==
          doctest::Approx(0.0).epsilon(1e-12));
    CHECK_THROWS_AS(powerlaw_linear_bias_relations(2, d, sigma2), DomainError);

    // agreement with the equivalents improves as n approaches d
    const auto m = decay_model(d, 1.0, 0.0, sigma2, ModelKind::linear);
    double prev_v = std::numeric_limits<double>::infinity();
    double prev_b = std::numeric_limits<double>::infinity();
    for (long n : {350L, 380L, 390L}) {
        const auto r = risk_linear_minnorm(m, n, d);
        const auto nn = norm_linear_minnorm(m, n, d);
        const double vres = std::abs(rel0.variance_residual(r.variance, nn.variance)) /
                            r.variance;
        const double bres = std::abs(rel0.bias_residual(r.bias, nn.bias)) / r.bias;
        CHECK(vres < prev_v);
        CHECK(bres < prev_b);
        prev_v = vres;
        prev_b = bres;
    }
    CHECK(prev_v < 0.05);
    CHECK(prev_b < 0.05);
}
