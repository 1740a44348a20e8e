#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "deteq/errors.hpp"
#include "deteq/spectral_model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

using namespace deteq;

namespace {

SpectralModel isotropic(std::size_t d, double theta_sq, double sigma2,
                        ModelKind kind = ModelKind::rfm) {
    std::vector<double> eig(d, 1.0);
    std::vector<double> coef(d, std::sqrt(theta_sq / static_cast<double>(d)));
    return SpectralModel::finite(eig, coef, sigma2, kind);
}

// Brute-force power-law sum over K terms plus the crude pointwise tail
// bound sum_{k>K} k^-m / nu^g <= K^(1-m) / ((m-1) nu^g): the engine value
// must land between the partial sum and partial + bound.
struct BruteWindow {
    double lo, hi;
};

BruteWindow brute_window(double alpha, double m, double gamma, double nu, long K) {
    double sum = 0.0, comp = 0.0;
    for (long k = K; k >= 1; --k) {
        const double x = static_cast<double>(k);
        const double term = std::pow(x, -m) * std::pow(std::pow(x, -alpha) + nu, -gamma);
        const double y = term - comp;
        const double s = sum + y;
        comp = (s - sum) - y;
        sum = s;
    }
    const double bound =
        std::pow(static_cast<double>(K), 1.0 - m) / ((m - 1.0) * std::pow(nu, gamma));
    return {sum, sum + bound};
}

} // namespace

TEST_CASE("factory validation") {
    CHECK_THROWS_WITH_AS(SpectralModel::power_law(1.0, 0.4, 0.0),
                         doctest::Contains("capacity condition"), DomainError);
    CHECK_THROWS_AS(SpectralModel::power_law(0.5, 0.4, 0.0), DomainError);
    CHECK_THROWS_AS(SpectralModel::power_law(1.5, 0.0, 0.0), DomainError);
    CHECK_THROWS_AS(SpectralModel::power_law(1.5, 0.4, -1.0), DomainError);
    CHECK_THROWS_AS(SpectralModel::power_law(1.5, 0.4, 0.0, 2.0), DomainError);
    CHECK_THROWS_AS(SpectralModel::finite({1.0, 2.0}, {0.0, 0.0, 0.0}, 0.0), DomainError);
    CHECK_THROWS_AS(SpectralModel::finite({1.0, 0.0}, {0.0, 0.0}, 0.0), DomainError);
    CHECK_THROWS_AS(SpectralModel::finite({1.0, 2.0}, {0.0, 0.0}, 0.0), DomainError);
    CHECK_THROWS_AS(SpectralModel::finite({}, {}, 0.0), DomainError);
}

TEST_CASE("degrees of freedom on the identity spectrum") {
    const auto m = isotropic(64, 1.0, 0.0);
    const auto df = m.degrees_of_freedom(1.0);
    CHECK(df.df1 == doctest::Approx(32.0).epsilon(1e-14));
    CHECK(df.df2 == doctest::Approx(16.0).epsilon(1e-14));
}

TEST_CASE("df decays to zero and is strictly decreasing in nu") {
    const auto pl = SpectralModel::power_law(1.7, 0.3, 0.0);
    const auto fin = isotropic(100, 1.0, 0.0);
    for (const SpectralModel* m : {&pl, &fin}) {
        double prev1 = std::numeric_limits<double>::infinity();
        double prev2 = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 24; ++i) {
            const double nu = 1e-4 * std::pow(10.0, i * 0.4);
            const auto df = m->degrees_of_freedom(nu);
            CHECK(df.df1 < prev1);
            CHECK(df.df2 < prev2);
            CHECK(df.df2 <= df.df1);
            prev1 = df.df1;
            prev2 = df.df2;
        }
        CHECK(m->degrees_of_freedom(1e12).df1 < 1e-9);
    }
}

TEST_CASE("identity df1 - df2 = nu Tr(L (L+nu)^-2) on explicit models") {
    std::vector<double> eig, coef;
    for (int k = 1; k <= 500; ++k) {
        eig.push_back(std::pow(static_cast<double>(k), -1.1));
        coef.push_back(std::pow(static_cast<double>(k), -0.8));
    }
    const auto m = SpectralModel::finite(eig, coef, 0.1);
    for (double nu : {1e-4, 1e-2, 1.0, 30.0}) {
        const auto df = m.degrees_of_freedom(nu);
        const double lhs = df.df1 - df.df2;
        const double rhs = nu * m.trace_shift_inv2(nu);
        CHECK(std::abs(lhs - rhs) <= 1e-10 * std::abs(lhs));
    }
}

TEST_CASE("power-law df1 sits inside the brute-force window") {
    const auto m = SpectralModel::power_law(2.0, 0.25, 0.0);
    const double nu = 1e-4;
    const auto win = brute_window(2.0, 2.0, 1.0, nu, 2'000'000);
    const double df1 = m.degrees_of_freedom(nu).df1;
    CHECK(df1 >= win.lo);
    CHECK(df1 <= win.hi);
    // integral approximation C1 nu^(-1/2)
    const double c1 = std::numbers::pi / (2.0 * std::sin(std::numbers::pi / 2.0));
    CHECK(std::abs(df1 - c1 / std::sqrt(nu)) <= 0.03 * df1);
}

TEST_CASE("quad forms: zero target, scalar case, brute-force window") {
    std::vector<double> eig(10, 1.0), zero(10, 0.0);
    const auto z = SpectralModel::finite(eig, zero, 0.0);
    const auto qz = z.quad_forms(0.7);
    CHECK(qz.q_inv1 == 0.0);
    CHECK(qz.q_lam2_inv2 == 0.0);

    const auto iso = isotropic(200, 1.0, 0.0);
    const auto q = iso.quad_forms(3.0);
    CHECK(q.q_inv1 == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(q.q_lam_inv1 == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(q.q_inv2 == doctest::Approx(1.0 / 16).epsilon(1e-14));
    CHECK(q.q_lam_inv2 == doctest::Approx(1.0 / 16).epsilon(1e-14));
    CHECK(q.q_lam2_inv2 == doctest::Approx(1.0 / 16).epsilon(1e-14));

    const auto pl = SpectralModel::power_law(1.5, 0.4, 0.0);
    const auto qf = pl.quad_forms(0.01);
    const double m = 1.0 + 2.0 * 1.5 * 0.4; // squared-coefficient decay
    const auto w1 = brute_window(1.5, m, 1.0, 0.01, 10'000'000);
    CHECK(qf.q_inv1 >= w1.lo);
    CHECK(qf.q_inv1 <= w1.hi);
    const auto w2 = brute_window(1.5, m, 2.0, 0.01, 10'000'000);
    CHECK(qf.q_inv2 >= w2.lo);
    CHECK(qf.q_inv2 <= w2.hi);
    const auto w3 = brute_window(1.5, m + 1.5, 2.0, 0.01, 10'000'000);
    CHECK(qf.q_lam_inv2 >= w3.lo * (1.0 - 1e-12));
    CHECK(qf.q_lam_inv2 <= w3.hi);
}

TEST_CASE("quad form order relations and the resolvent identity") {
    const auto pl = SpectralModel::power_law(1.5, 0.4, 0.0);
    const double norm_sq = pl.coeff_norm_sq();
    for (double nu : {1e-6, 1e-3, 0.5, 20.0}) {
        const auto q = pl.quad_forms(nu);
        CHECK(q.q_lam_inv1 <= norm_sq);
        CHECK(q.q_lam2_inv2 <= q.q_lam_inv1);
        const double lhs = q.q_lam_inv1;
        const double rhs = norm_sq - nu * q.q_inv1;
        CHECK(std::abs(lhs - rhs) <= 1e-10 * std::abs(lhs));
    }
}

TEST_CASE("eigensum_T") {
    const auto pl = SpectralModel::power_law(2.0, 0.3, 0.0);
    // definitional coincidence with the first quadratic form
    const double t = pl.eigensum_T(1, 0.6, 1.0, 0.02);
    CHECK(t == doctest::Approx(pl.quad_forms(0.02).q_inv1).epsilon(1e-13));
    // df1 shape approaches C1 nu^(-1/alpha)
    const double c1 = std::numbers::pi / (2.0 * std::sin(std::numbers::pi / 2.0));
    const double v = pl.eigensum_T(0, 1.0, 1.0, 1e-4);
    CHECK(std::abs(v - c1 * 1e2) <= 0.02 * v);
    // dominated decay
    CHECK(pl.eigensum_T(0, 1.0, 1.0, 1e9) < 1e-6);
    // divergent exponent rejected (s + delta alpha <= 1)
    CHECK_THROWS_AS(pl.eigensum_T(0, 0.0, 1.0, 1e-4), DomainError);
    CHECK_THROWS_AS(pl.eigensum_T(1, 2.0, 1.0, 1e-4), DomainError); // delta > gamma
    const auto fin = isotropic(10, 1.0, 0.0);
    CHECK_THROWS_AS(fin.eigensum_T(0, 1.0, 1.0, 0.1), DomainError);
}

TEST_CASE("tail control: doubling the truncation stays within tail_tol") {
    const auto pl = SpectralModel::power_law(1.5, 0.4, 0.0, 1e-8);
    for (double nu : {1e-5, 1e-2}) {
        detail::pl_forced_min_terms = 1u << 15;
        const double a1 = pl.degrees_of_freedom(nu).df1;
        const double b1 = pl.quad_forms(nu).q_inv2;
        detail::pl_forced_min_terms = 1u << 16;
        const double a2 = pl.degrees_of_freedom(nu).df1;
        const double b2 = pl.quad_forms(nu).q_inv2;
        detail::pl_forced_min_terms = 0;
        CHECK(std::abs(a1 - a2) <= 1e-8 * std::abs(a2));
        CHECK(std::abs(b1 - b2) <= 1e-8 * std::abs(b2));
    }
}

TEST_CASE("eigenvalue tails") {
    std::vector<double> eig{4.0, 2.0, 1.0};
    const auto fin = SpectralModel::finite(eig, {1.0, 1.0, 1.0}, 0.0);
    CHECK(fin.eigenvalue_tail_sum(1) == doctest::Approx(7.0));
    CHECK(fin.eigenvalue_tail_sum(3) == doctest::Approx(1.0));
    CHECK(fin.eigenvalue_tail_sum(4) == 0.0);
    const auto pl = SpectralModel::power_law(2.0, 0.25, 0.0);
    CHECK(pl.eigenvalue_tail_sum(1) ==
          doctest::Approx(std::numbers::pi * std::numbers::pi / 6.0).epsilon(1e-12));
    CHECK(pl.eigenvalue_tail_sum(5) - pl.eigenvalue_tail_sum(6) ==
          doctest::Approx(std::pow(5.0, -2.0)).epsilon(1e-12));
}

TEST_CASE("trace functionals") {
    const auto pl = SpectralModel::power_law(2.0, 0.25, 0.0);
    CHECK(pl.trace() == doctest::Approx(std::numbers::pi * std::numbers::pi / 6.0)
                            .epsilon(1e-12));
    CHECK_THROWS_AS(pl.trace_inverse(), DomainError);
    const auto fin = SpectralModel::finite({2.0, 1.0}, {1.0, 2.0}, 0.0);
    CHECK(fin.trace() == doctest::Approx(3.0));
    CHECK(fin.trace_inverse() == doctest::Approx(1.5));
    CHECK(fin.coeff_norm_sq() == doctest::Approx(5.0));
}

TEST_CASE("spectrum file round trip") {
    const auto pl = SpectralModel::power_law(1.5, 0.4, 0.01);
    std::ostringstream os;
    pl.save(os);
    CHECK(os.str().rfind("# spectral_model v1", 0) == 0);
    std::istringstream is(os.str());
    const auto back = SpectralModel::load(is, ModelKind::rfm);
    CHECK(back.is_power_law());
    CHECK(back.alpha() == 1.5);
    CHECK(back.source_r() == 0.4);
    CHECK(back.noise_var() == 0.01);

    const auto fin = SpectralModel::finite({2.0, 1.0, 0.5}, {0.1, -0.2, 0.3}, 0.25);
    std::ostringstream os2;
    fin.save(os2);
    std::istringstream is2(os2.str());
    const auto back2 = SpectralModel::load(is2, ModelKind::linear);
    CHECK(back2.rank() == 3);
    CHECK(back2.eigenvalues()[1] == 1.0);
    CHECK(back2.target_coeffs()[1] == -0.2);
    CHECK(back2.noise_var() == 0.25);

    std::istringstream bad("no header\n1 2\n");
    CHECK_THROWS_AS(SpectralModel::load(bad, ModelKind::linear), ConfigError);
    std::istringstream garbage("# spectral_model v1\nwhat even\n");
    CHECK_THROWS_AS(SpectralModel::load(garbage, ModelKind::linear), ConfigError);
}
