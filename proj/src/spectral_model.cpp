#include "deteq/spectral_model.hpp"

#include "deteq/errors.hpp"
#include "deteq/reduce.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>

namespace deteq {

namespace {
constexpr std::size_t kPlBaseTerms = 1u << 14;
constexpr std::size_t kPlMaxTerms = 1u << 22;
} // namespace

// Chunked append-only store of the power-law sequences. Chunk slots are
// preallocated, so concurrent readers never see a moving pointer array;
// filled is published with release semantics after a chunk is written.
struct PowerLawCache {
    static constexpr std::size_t kChunk = 1u << 14;
    static constexpr std::size_t kSlots = kPlMaxTerms / kChunk;

    // theta_sq_exp is the decay exponent of the squared coefficients.
    explicit PowerLawCache(double alpha, double theta_sq_exp)
        : alpha_(alpha), theta_exp_(theta_sq_exp), u_(kSlots), t_(kSlots) {}

    void ensure(std::size_t n) {
        if (filled_.load(std::memory_order_acquire) >= n) return;
        std::lock_guard<std::mutex> lock(mu_);
        std::size_t have = filled_.load(std::memory_order_relaxed);
        while (have < n && have < kPlMaxTerms) {
            const std::size_t slot = have / kChunk;
            auto u = std::make_unique<double[]>(kChunk);
            auto t = std::make_unique<double[]>(kChunk);
            for (std::size_t i = 0; i < kChunk; ++i) {
                const double x = static_cast<double>(have + i + 1);
                u[i] = std::pow(x, -alpha_);
                t[i] = std::pow(x, -theta_exp_);
            }
            u_[slot] = std::move(u);
            t_[slot] = std::move(t);
            have += kChunk;
            filled_.store(have, std::memory_order_release);
        }
    }

    // 1-based; valid after ensure(k).
    double u(std::size_t k) const { return u_[(k - 1) / kChunk][(k - 1) % kChunk]; }
    double theta2(std::size_t k) const { return t_[(k - 1) / kChunk][(k - 1) % kChunk]; }

private:
    double alpha_;
    double theta_exp_;
    std::mutex mu_;
    std::atomic<std::size_t> filled_{0};
    std::vector<std::unique_ptr<double[]>> u_;
    std::vector<std::unique_ptr<double[]>> t_;
};

namespace detail {

std::size_t pl_forced_min_terms = 0;

namespace {

// Adaptive Simpson on [lo, hi]; the integrands handed in are analytic
// and mildly varying, so this converges in a handful of levels.
template <typename F>
double simpson_rec(F& f, double lo, double hi, double flo, double fmid,
                   double fhi, double whole, double tol, int depth) {
    const double mid = 0.5 * (lo + hi);
    const double lm = 0.5 * (lo + mid);
    const double rm = 0.5 * (mid + hi);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
    const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return simpson_rec(f, lo, mid, flo, flm, fmid, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, mid, hi, fmid, frm, fhi, right, 0.5 * tol, depth - 1);
}

template <typename F>
double simpson(F f, double lo, double hi, double tol) {
    if (hi <= lo) return 0.0;
    const double flo = f(lo);
    const double fhi = f(hi);
    const double fmid = f(0.5 * (lo + hi));
    const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    return simpson_rec(f, lo, hi, flo, fmid, fhi, whole, tol, 48);
}

// Small-argument piece: int_0^z u^(a-1) (1+u)^-g du for z <= 1/2 via the
// binomial series; term ratio tends to z, so it converges geometrically.
double integral_u_series_small(double a, double g, double z) {
    double c = 1.0; // (-1)^j binom(g+j-1, j)
    double za = std::pow(z, a);
    double acc = za / a;
    for (int j = 0; j < 400; ++j) {
        c *= -(g + j) / (j + 1.0);
        za *= z;
        const double term = c * za / (a + j + 1.0);
        acc += term;
        if (std::abs(term) <= 1e-17 * std::abs(acc)) break;
    }
    return acc;
}

// Far piece: int_2^z u^(a-1) (1+u)^-g du, z > 2, expanding (1+1/u)^-g.
double integral_u_series_far(double a, double g, double z) {
    double c = 1.0;
    double acc = 0.0;
    for (int j = 0; j < 400; ++j) {
        const double e = a - g - j;
        // int_2^z u^(e-1) du = 2^e expm1(e log(z/2)) / e, smooth at e = 0.
        const double lz = std::log(z / 2.0);
        const double piece =
            std::pow(2.0, e) * (std::abs(e) > 1e-12 ? std::expm1(e * lz) / e : lz * (1.0 + 0.5 * e * lz));
        const double term = c * piece;
        acc += term;
        if (j > 2 && std::abs(term) <= 1e-17 * std::abs(acc)) break;
        c *= -(g + j) / (j + 1.0);
    }
    return acc;
}

} // namespace

double integral_u(double a, double g, double z) {
    if (z <= 0.0) return 0.0;
    if (z <= 0.5) return integral_u_series_small(a, g, z);
    double acc = integral_u_series_small(a, g, 0.5);
    const double zm = std::min(z, 2.0);
    acc += simpson([a, g](double u) { return std::pow(u, a - 1.0) * std::pow(1.0 + u, -g); },
                   0.5, zm, 1e-16 * std::max(acc, 1.0));
    if (z > 2.0) acc += integral_u_series_far(a, g, z);
    return acc;
}

} // namespace detail

namespace {

// Log-derivative chain for f(x) = x^-m (x^-alpha + nu)^-g, used by the
// Euler-Maclaurin boundary terms.
struct PlDerivs {
    double f, fp, fppp;
};

PlDerivs pl_derivs(double x, double m, double alpha, double g, double nu) {
    const double u = std::pow(x, -alpha);
    const double D = u + nu;
    const double f = std::pow(x, -m) * std::pow(D, -g);
    const double L = -m / x + g * alpha * u / (x * D);
    const double Lp = m / (x * x) - g * alpha * u * (D + alpha * nu) / (x * x * D * D);
    const double Lpp = -2.0 * m / (x * x * x) +
                       g * alpha * u *
                           (alpha * D * (D + alpha * nu + u) +
                            2.0 * (D + alpha * nu) * (D - alpha * u)) /
                           (x * x * x * D * D * D);
    PlDerivs d;
    d.f = f;
    d.fp = f * L;
    d.fppp = f * (L * L * L + 3.0 * L * Lp + Lpp);
    return d;
}

} // namespace

SpectralModel SpectralModel::power_law(double alpha, double r, double noise_var,
                                       double tail_tol, ModelKind kind) {
    if (!(alpha > 1.0))
        throw DomainError("power_law: capacity condition violated, alpha must exceed 1 "
                          "(trace of the spectrum diverges otherwise)");
    if (!(r > 0.0)) throw DomainError("power_law: source exponent r must be positive");
    if (!(noise_var >= 0.0)) throw DomainError("power_law: noise variance must be >= 0");
    if (!(tail_tol > 0.0 && tail_tol < 1.0))
        throw DomainError("power_law: tail_tol must lie in (0, 1)");
    SpectralModel m;
    m.kind_ = kind;
    m.power_law_ = true;
    m.alpha_ = alpha;
    m.r_ = r;
    m.noise_var_ = noise_var;
    m.tail_tol_ = std::max(tail_tol, 1e-11);
    m.cache_ = std::make_shared<PowerLawCache>(alpha, 1.0 + 2.0 * alpha * r);
    return m;
}

SpectralModel SpectralModel::finite(std::vector<double> eigenvalues,
                                    std::vector<double> target_coeffs,
                                    double noise_var, ModelKind kind) {
    if (eigenvalues.size() != target_coeffs.size())
        throw DomainError("finite: eigenvalue and coefficient vectors differ in length");
    if (eigenvalues.empty()) throw DomainError("finite: empty spectrum");
    if (!(noise_var >= 0.0)) throw DomainError("finite: noise variance must be >= 0");
    for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
        if (!(eigenvalues[i] > 0.0))
            throw DomainError("finite: eigenvalues must be strictly positive");
        if (i > 0 && eigenvalues[i] > eigenvalues[i - 1])
            throw DomainError("finite: eigenvalues must be non-increasing");
    }
    SpectralModel m;
    m.kind_ = kind;
    m.noise_var_ = noise_var;
    m.eigs_ = std::move(eigenvalues);
    m.coeffs_ = std::move(target_coeffs);
    m.eig_suffix_.assign(m.eigs_.size() + 1, 0.0);
    for (std::size_t i = m.eigs_.size(); i-- > 0;) {
        NeumaierSum s;
        s.add(m.eig_suffix_[i + 1]);
        s.add(m.eigs_[i]);
        m.eig_suffix_[i] = s.value();
    }
    return m;
}

double SpectralModel::alpha() const {
    if (!power_law_) throw DomainError("alpha: not a power-law model");
    return alpha_;
}

double SpectralModel::source_r() const {
    if (!power_law_) throw DomainError("source_r: not a power-law model");
    return r_;
}

std::size_t SpectralModel::rank() const {
    if (power_law_) throw DomainError("rank: power-law model has unbounded rank");
    return eigs_.size();
}

const std::vector<double>& SpectralModel::eigenvalues() const {
    if (power_law_) throw DomainError("eigenvalues: power-law model has no explicit vector");
    return eigs_;
}

const std::vector<double>& SpectralModel::target_coeffs() const {
    if (power_law_) throw DomainError("target_coeffs: power-law model has no explicit vector");
    return coeffs_;
}

double SpectralModel::eigenvalue(std::size_t k) const {
    if (k == 0) throw DomainError("eigenvalue: index is 1-based");
    if (power_law_) return std::pow(static_cast<double>(k), -alpha_);
    return k <= eigs_.size() ? eigs_[k - 1] : 0.0;
}

double SpectralModel::eigenvalue_tail_sum(std::size_t k) const {
    if (k == 0) throw DomainError("eigenvalue_tail_sum: index is 1-based");
    if (!power_law_) return k <= eigs_.size() ? eig_suffix_[k - 1] : 0.0;
    // sum_{j >= k} j^-alpha: direct terms up to a point far enough out for
    // the Euler-Maclaurin boundary series to be deep in its regime.
    const std::size_t k0 = std::max<std::size_t>(k, 4096);
    NeumaierSum head;
    for (std::size_t j = k; j < k0; ++j)
        head.add(std::pow(static_cast<double>(j), -alpha_));
    const double x = static_cast<double>(k0);
    const auto d = pl_derivs(x, alpha_, alpha_, 0.0, 1.0);
    const double integral = std::pow(x, 1.0 - alpha_) / (alpha_ - 1.0);
    return head.value() + integral + 0.5 * d.f - d.fp / 12.0 + d.fppp / 720.0;
}

// Core evaluator for sum_{k>=1} k^-(s + delta*alpha) (k^-alpha + nu)^-gamma.
// Direct compensated summation of the first K terms, then an analytic
// remainder: the tail integral in closed incomplete-Beta form plus the
// Euler-Maclaurin boundary corrections at K+1. K adapts (doubling) until
// the next unused correction term is below tail_tol relative.
double SpectralModel::pl_sum(double s, double delta, double gamma, double nu) const {
    const double m = s + delta * alpha_;
    if (!(m > 1.0)) throw DomainError("power-law sum diverges: s + delta*alpha must exceed 1");
    if (gamma > 0.0 && !(nu > 0.0)) throw DomainError("power-law sum: nu must be positive");

    std::size_t K = kPlBaseTerms;
    if (gamma > 0.0) {
        // Place the truncation past the knee k ~ nu^(-1/alpha) when that
        // is affordable; the tail formula stays valid either way.
        const double knee = std::pow(nu, -1.0 / alpha_);
        if (knee > static_cast<double>(K) && 2.0 * knee < static_cast<double>(kPlMaxTerms))
            K = static_cast<std::size_t>(2.0 * knee);
    }
    K = std::max(K, detail::pl_forced_min_terms);
    K = std::min(K, kPlMaxTerms);

    // The spectral functionals hit a handful of (s, delta) shapes whose
    // numerators reduce to cached sequences; anything else (general
    // eigensum_T arguments) falls back to per-term pow.
    int upow = -1;
    bool use_theta = false;
    if (s == 0.0) {
        if (delta == 1.0) upow = 1;
        else if (delta == 2.0) upow = 2;
    } else if (s == 1.0) {
        const double tr = 2.0 * r_;
        if (delta == tr) { upow = 0; use_theta = true; }
        else if (delta == tr + 1.0) { upow = 1; use_theta = true; }
        else if (delta == tr + 2.0) { upow = 2; use_theta = true; }
    }
    const int gpow = gamma == 0.0 ? 0 : gamma == 1.0 ? 1 : gamma == 2.0 ? 2 : -1;
    PowerLawCache* cache = cache_.get();

    const double alpha = alpha_;
    for (;;) {
        double partial;
        if (upow >= 0 && gpow >= 0) {
            cache->ensure(K);
            partial = reduce::sum_blocked(K, [=](std::size_t k) {
                const double u = cache->u(k);
                double num = use_theta ? cache->theta2(k) : 1.0;
                if (upow >= 1) num *= u;
                if (upow == 2) num *= u;
                if (gpow == 0) return num;
                const double den = u + nu;
                return gpow == 1 ? num / den : num / (den * den);
            });
        } else {
            partial = reduce::sum_blocked(K, [=](std::size_t k) {
                const double x = static_cast<double>(k);
                return std::pow(x, -m) * std::pow(std::pow(x, -alpha) + nu, -gamma);
            });
        }

        const double x0 = static_cast<double>(K + 1);
        double tail_integral;
        if (gamma == 0.0) {
            tail_integral = std::pow(x0, 1.0 - m) / (m - 1.0);
        } else {
            // int_x0^inf x^-m (x^-alpha + nu)^-gamma dx
            //   = (nu^(a-gamma)/alpha) * int_0^{x0^-alpha / nu} u^(a-1) (1+u)^-gamma du
            const double a = delta + (s - 1.0) / alpha;
            const double z = std::pow(x0, -alpha) / nu;
            tail_integral =
                std::pow(nu, a - gamma) / alpha * detail::integral_u(a, gamma, z);
        }
        const auto d = pl_derivs(x0, m, alpha, gamma, nu);
        const double tail = tail_integral + 0.5 * d.f - d.fp / 12.0 + d.fppp / 720.0;
        const double total = partial + tail;

        // The first omitted Euler-Maclaurin term bounds the remainder.
        const double bound = std::abs(d.fppp) / 720.0;
        if (bound <= tail_tol_ * std::abs(total) || K >= kPlMaxTerms) return total;
        K = std::min(K * 2, kPlMaxTerms);
    }
}

double SpectralModel::trace() const {
    if (power_law_) return pl_sum(0.0, 1.0, 0.0, 0.0);
    return reduce::sum_blocked(eigs_.size(), [&](std::size_t k) { return eigs_[k - 1]; });
}

double SpectralModel::trace_inverse() const {
    if (power_law_)
        throw DomainError("trace_inverse: diverges for a power-law spectrum");
    return reduce::sum_blocked(eigs_.size(),
                               [&](std::size_t k) { return 1.0 / eigs_[k - 1]; });
}

double SpectralModel::coeff_norm_sq() const {
    if (power_law_) return pl_sum(1.0, 2.0 * r_, 0.0, 0.0);
    return reduce::sum_blocked(coeffs_.size(), [&](std::size_t k) {
        return coeffs_[k - 1] * coeffs_[k - 1];
    });
}

DegreesOfFreedom SpectralModel::degrees_of_freedom(double nu) const {
    if (!(nu > 0.0)) throw DomainError("degrees_of_freedom: nu must be positive");
    DegreesOfFreedom d;
    if (power_law_) {
        d.df1 = pl_sum(0.0, 1.0, 1.0, nu);
        d.df2 = pl_sum(0.0, 2.0, 2.0, nu);
        return d;
    }
    d.df1 = reduce::sum_blocked(eigs_.size(), [&](std::size_t k) {
        const double l = eigs_[k - 1];
        return l / (l + nu);
    });
    d.df2 = reduce::sum_blocked(eigs_.size(), [&](std::size_t k) {
        const double q = eigs_[k - 1] / (eigs_[k - 1] + nu);
        return q * q;
    });
    return d;
}

double SpectralModel::trace_shift_inv2(double nu) const {
    if (!(nu > 0.0)) throw DomainError("trace_shift_inv2: nu must be positive");
    if (power_law_) return pl_sum(0.0, 1.0, 2.0, nu);
    return reduce::sum_blocked(eigs_.size(), [&](std::size_t k) {
        const double l = eigs_[k - 1];
        return l / ((l + nu) * (l + nu));
    });
}

QuadForms SpectralModel::quad_forms(double nu) const {
    if (!(nu > 0.0)) throw DomainError("quad_forms: nu must be positive");
    QuadForms q;
    if (power_law_) {
        const double tr = 2.0 * r_;
        q.q_inv1 = pl_sum(1.0, tr, 1.0, nu);
        q.q_lam_inv1 = pl_sum(1.0, tr + 1.0, 1.0, nu);
        q.q_inv2 = pl_sum(1.0, tr, 2.0, nu);
        q.q_lam_inv2 = pl_sum(1.0, tr + 1.0, 2.0, nu);
        q.q_lam2_inv2 = pl_sum(1.0, tr + 2.0, 2.0, nu);
        return q;
    }
    NeumaierSum a, b, c, d, e;
    for (std::size_t i = 0; i < eigs_.size(); ++i) {
        const double l = eigs_[i];
        const double t2 = coeffs_[i] * coeffs_[i];
        const double inv = 1.0 / (l + nu);
        a.add(t2 * inv);
        b.add(t2 * l * inv);
        c.add(t2 * inv * inv);
        d.add(t2 * l * inv * inv);
        e.add(t2 * l * l * inv * inv);
    }
    q.q_inv1 = a.value();
    q.q_lam_inv1 = b.value();
    q.q_inv2 = c.value();
    q.q_lam_inv2 = d.value();
    q.q_lam2_inv2 = e.value();
    return q;
}

double SpectralModel::eigensum_T(int s, double delta, double gamma, double nu) const {
    if (!power_law_) throw DomainError("eigensum_T: requires a power-law model");
    if (s != 0 && s != 1) throw DomainError("eigensum_T: s must be 0 or 1");
    if (!(delta >= 0.0 && delta <= gamma))
        throw DomainError("eigensum_T: need 0 <= delta <= gamma");
    return pl_sum(static_cast<double>(s), delta, gamma, nu);
}

void SpectralModel::save(std::ostream& os) const {
    os << "# spectral_model v1\n";
    char buf[128];
    if (power_law_) {
        std::snprintf(buf, sizeof(buf), "powerlaw alpha=%.17g r=%.17g sigma2=%.17g\n",
                      alpha_, r_, noise_var_);
        os << buf;
        return;
    }
    std::snprintf(buf, sizeof(buf), "# sigma2=%.17g\n", noise_var_);
    os << buf;
    for (std::size_t i = 0; i < eigs_.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", eigs_[i], coeffs_[i]);
        os << buf;
    }
}

SpectralModel SpectralModel::load(std::istream& is, ModelKind kind) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("# spectral_model v1", 0) != 0)
        throw ConfigError("spectrum file: missing '# spectral_model v1' header");
    double sigma2 = 0.0;
    std::vector<double> eigs, coeffs;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line.rfind("# sigma2=", 0) == 0) {
            sigma2 = std::stod(line.substr(9));
            continue;
        }
        if (line[0] == '#') continue;
        if (line.rfind("powerlaw", 0) == 0) {
            double alpha = 0.0, r = 0.0, s2 = 0.0;
            std::istringstream ls(line.substr(8));
            std::string tok;
            bool have_a = false, have_r = false;
            while (ls >> tok) {
                if (tok.rfind("alpha=", 0) == 0) { alpha = std::stod(tok.substr(6)); have_a = true; }
                else if (tok.rfind("r=", 0) == 0) { r = std::stod(tok.substr(2)); have_r = true; }
                else if (tok.rfind("sigma2=", 0) == 0) s2 = std::stod(tok.substr(7));
                else throw ConfigError("spectrum file: unknown powerlaw field '" + tok + "'");
            }
            if (!have_a || !have_r)
                throw ConfigError("spectrum file: powerlaw line needs alpha= and r=");
            return power_law(alpha, r, s2, 1e-8, kind);
        }
        std::istringstream ls(line);
        double e = 0.0, c = 0.0;
        if (!(ls >> e >> c))
            throw ConfigError("spectrum file: expected '<eigenvalue> <coefficient>' line, got '" +
                              line + "'");
        eigs.push_back(e);
        coeffs.push_back(c);
    }
    if (eigs.empty()) throw ConfigError("spectrum file: no spectrum lines");
    return finite(std::move(eigs), std::move(coeffs), sigma2, kind);
}

void SpectralModel::save_file(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open spectrum file for writing: " + path);
    save(os);
}

SpectralModel SpectralModel::load_file(const std::string& path, ModelKind kind) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open spectrum file: " + path);
    return load(is, kind);
}

} // namespace deteq
