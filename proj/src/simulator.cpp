#define EIGEN_DONT_PARALLELIZE 1

#include "deteq/simulator.hpp"

#include "deteq/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace deteq {

namespace detail {

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}
} // namespace

std::uint64_t trial_seed(std::uint64_t seed, long trial) {
    return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(trial) + 1));
}

} // namespace detail

namespace {

// Gaussian draws from an explicit Box-Muller over mt19937_64 output, so
// results do not depend on the standard library's distribution internals.
class GaussStream {
public:
    explicit GaussStream(std::uint64_t seed) : eng_(seed) {}

    double next() {
        if (have_) {
            have_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double rad = std::sqrt(-2.0 * std::log(u1));
        const double ang = 6.283185307179586476925286766559 * u2;
        spare_ = rad * std::sin(ang);
        have_ = true;
        return rad * std::cos(ang);
    }

    void fill(Eigen::MatrixXd& m) {
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = next();
    }

private:
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53; // 53-bit [0, 1)
    }
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_ = false;
};

struct TrialResult {
    double risk_bias = 0.0, risk_var = 0.0, norm_bias = 0.0, norm_var = 0.0;
};

// One linear-regression draw; noise integrated analytically, so the four
// reported quantities are exact in eps given X.
TrialResult linear_trial(const SpectralModel& model, const SimConfig& cfg,
                         std::uint64_t seed) {
    const long n = cfg.n;
    const long d = cfg.d_or_p;
    const double lambda = cfg.lambda;
    const double sigma2 = model.noise_var();
    const auto& eig = model.eigenvalues();
    const auto& beta = model.target_coeffs();

    GaussStream rng(seed);
    Eigen::MatrixXd X(n, d);
    rng.fill(X);
    for (long k = 0; k < d; ++k) X.col(k) *= std::sqrt(eig[static_cast<std::size_t>(k)]);
    const Eigen::Map<const Eigen::VectorXd> b(beta.data(), d);
    const Eigen::Map<const Eigen::VectorXd> sig(eig.data(), d);

    TrialResult out;
    if (d <= n) {
        const Eigen::MatrixXd C = X.transpose() * X;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
        const Eigen::VectorXd& ev = es.eigenvalues();
        const Eigen::MatrixXd& Q = es.eigenvectors();
        const Eigen::VectorXd qb = Q.transpose() * b;
        // qsq(j) = q_j^T Sigma q_j
        const Eigen::VectorXd qsq =
            (Q.array().square().colwise() * sig.array()).colwise().sum().transpose();
        if (lambda > 0.0) {
            const Eigen::ArrayXd den = ev.array() + lambda;
            const Eigen::VectorXd u = Q * (qb.array() / den).matrix();
            out.risk_bias = lambda * lambda * (sig.array() * u.array().square()).sum();
            out.risk_var = sigma2 * (qsq.array() * ev.array() / den.square()).sum();
            out.norm_bias = (qb.array().square() * (ev.array() / den).square()).sum();
            out.norm_var = sigma2 * (ev.array() / den.square()).sum();
        } else {
            out.risk_bias = 0.0;
            out.norm_bias = b.squaredNorm();
            out.risk_var = sigma2 * (qsq.array() / ev.array()).sum();
            out.norm_var = sigma2 * ev.array().inverse().sum();
        }
        return out;
    }

    // d > n: eigendecompose K = X X^T; the nonzero spectrum of C, with the
    // null space handled in closed form. g(i) = s_i (q_i . b), m2(i) =
    // u_i^T X Sigma X^T u_i = d_i q_i^T Sigma q_i.
    const Eigen::MatrixXd K = X * X.transpose();
    const Eigen::MatrixXd K2 = X * sig.asDiagonal() * X.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
    const Eigen::VectorXd& ev = es.eigenvalues();
    const Eigen::MatrixXd& U = es.eigenvectors();
    const Eigen::VectorXd g = U.transpose() * (X * b);
    const Eigen::VectorXd m2 = (U.transpose() * K2 * U).diagonal();

    const double sv_max = std::sqrt(std::max(ev.maxCoeff(), 0.0));
    const double cutoff_sv =
        static_cast<double>(std::max(n, d)) * std::numeric_limits<double>::epsilon() * sv_max;
    const double cutoff = cutoff_sv * cutoff_sv;

    if (lambda > 0.0) {
        const Eigen::ArrayXd den = ev.array() + lambda;
        // (C + l)^-1 b = b/l - X^T U diag(1 / (l (d_i + l))) g
        const Eigen::VectorXd u =
            b / lambda - X.transpose() * (U * (g.array() / (lambda * den)).matrix());
        out.risk_bias = lambda * lambda * (sig.array() * u.array().square()).sum();
        out.risk_var = sigma2 * (m2.array() / den.square()).sum();
        out.norm_bias = (g.array().square() * ev.array() / den.square()).sum();
        out.norm_var = sigma2 * (ev.array() / den.square()).sum();
        return out;
    }

    // Min-norm (pseudoinverse) with singular-value cutoff.
    Eigen::ArrayXd inv_ev = Eigen::ArrayXd::Zero(n);
    for (long i = 0; i < n; ++i)
        if (ev(i) > cutoff) inv_ev(i) = 1.0 / ev(i);
    const Eigen::VectorXd proj = X.transpose() * (U * (g.array() * inv_ev).matrix());
    const Eigen::VectorXd resid = b - proj;
    out.risk_bias = (sig.array() * resid.array().square()).sum();
    out.risk_var = sigma2 * (m2.array() * inv_ev.square()).sum();
    out.norm_bias = (g.array().square() * inv_ev).sum();
    out.norm_var = sigma2 * inv_ev.sum();
    return out;
}

TrialResult rfm_trial(const SpectralModel& model, const SimConfig& cfg, long K,
                      std::uint64_t seed) {
    const long n = cfg.n;
    const long p = cfg.d_or_p;
    const double lambda = cfg.lambda;
    const double sigma2 = model.noise_var();

    Eigen::VectorXd lam(K), theta(K);
    for (long k = 0; k < K; ++k) {
        lam(k) = model.eigenvalue(static_cast<std::size_t>(k + 1));
        if (model.is_power_law())
            theta(k) = std::pow(static_cast<double>(k + 1),
                                -(1.0 + 2.0 * model.alpha() * model.source_r()) / 2.0);
        else
            theta(k) = model.target_coeffs()[static_cast<std::size_t>(k)];
    }

    GaussStream rng(seed);
    Eigen::MatrixXd G(n, K);
    rng.fill(G);
    Eigen::MatrixXd F(p, K);
    rng.fill(F);
    for (long k = 0; k < K; ++k) F.col(k) *= std::sqrt(lam(k));

    const Eigen::MatrixXd Z = (G * F.transpose()) / std::sqrt(static_cast<double>(p));
    Eigen::BDCSVD<Eigen::MatrixXd> svd(Z, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    const Eigen::MatrixXd& V = svd.matrixV();
    const long rk = s.size();

    const Eigen::VectorXd w = Z.transpose() * (G * theta); // in range(V)
    const Eigen::VectorXd c = V.transpose() * w;

    const double cutoff = static_cast<double>(std::max(n, p)) *
                          std::numeric_limits<double>::epsilon() * s(0);

    Eigen::ArrayXd filt(rk); // pseudo-resolvent weights (s^2 + l)^-1
    for (long j = 0; j < rk; ++j) {
        if (lambda > 0.0)
            filt(j) = 1.0 / (s(j) * s(j) + lambda);
        else
            filt(j) = s(j) > cutoff ? 1.0 / (s(j) * s(j)) : 0.0;
    }

    TrialResult out;
    out.norm_bias = (c.array().square() * filt.square()).sum();
    out.norm_var = sigma2 * (s.array().square() * filt.square()).sum();

    const Eigen::VectorXd a = V * (c.array() * filt).matrix();
    const Eigen::VectorXd fit = F.transpose() * a / std::sqrt(static_cast<double>(p));
    out.risk_bias = (theta - fit).squaredNorm();

    const Eigen::MatrixXd FtV = F.transpose() * V; // columns F^T v_j
    const Eigen::ArrayXd fvn = FtV.colwise().squaredNorm().transpose();
    out.risk_var = sigma2 / static_cast<double>(p) *
                   (fvn * s.array().square() * filt.square()).sum();
    return out;
}

EmpiricalStats reduce_trials(const std::vector<TrialResult>& results) {
    const std::size_t t = results.size();
    std::vector<double> rb(t), rv(t), rt(t), nb(t), nv(t), nt(t);
    for (std::size_t i = 0; i < t; ++i) {
        rb[i] = results[i].risk_bias;
        rv[i] = results[i].risk_var;
        rt[i] = results[i].risk_bias + results[i].risk_var;
        nb[i] = results[i].norm_bias;
        nv[i] = results[i].norm_var;
        nt[i] = results[i].norm_bias + results[i].norm_var;
    }
    EmpiricalStats st;
    st.risk_bias = reduce::mean_se(rb);
    st.risk_var = reduce::mean_se(rv);
    st.risk_total = reduce::mean_se(rt);
    st.norm_bias = reduce::mean_se(nb);
    st.norm_var = reduce::mean_se(nv);
    st.norm_total = reduce::mean_se(nt);
    st.trials_used = static_cast<long>(t);
    return st;
}

} // namespace

EmpiricalStats simulate_linear(const SpectralModel& model, const SimConfig& cfg) {
    if (model.is_power_law())
        throw DomainError("simulate_linear: needs an explicit finite model");
    if (cfg.n < 1 || cfg.trials < 1)
        throw DomainError("simulate_linear: n and trials must be >= 1");
    if (static_cast<long>(model.rank()) != cfg.d_or_p)
        throw DomainError("simulate_linear: cfg.d_or_p must equal the model rank");
    if (cfg.lambda < 0.0) throw DomainError("simulate_linear: lambda must be >= 0");
    if (cfg.lambda == 0.0 && cfg.d_or_p == cfg.n)
        throw ThresholdError("simulate_linear: ridgeless at d = n is singular");

    std::vector<TrialResult> results(static_cast<std::size_t>(cfg.trials));
#pragma omp parallel for schedule(dynamic)
    for (long t = 0; t < cfg.trials; ++t)
        results[static_cast<std::size_t>(t)] =
            linear_trial(model, cfg, detail::trial_seed(cfg.seed, t));
    return reduce_trials(results);
}

EmpiricalStats simulate_rfm(const SpectralModel& model, const SimConfig& cfg) {
    if (model.kind() != ModelKind::rfm)
        throw DomainError("simulate_rfm: model kind must be rfm");
    if (cfg.n < 1 || cfg.d_or_p < 1 || cfg.trials < 1)
        throw DomainError("simulate_rfm: n, p, trials must be >= 1");
    if (cfg.lambda < 0.0) throw DomainError("simulate_rfm: lambda must be >= 0");
    if (cfg.lambda == 0.0 && cfg.d_or_p == cfg.n)
        throw ThresholdError("simulate_rfm: ridgeless at p = n is singular");
    long K = cfg.truncation;
    if (K == 0) K = 10 * std::max(cfg.n, cfg.d_or_p);
    if (K < std::max(cfg.n, cfg.d_or_p))
        throw DomainError("simulate_rfm: truncation K must be >= max(n, p)");
    if (model.is_finite_rank() && K > static_cast<long>(model.rank()))
        throw DomainError("simulate_rfm: truncation K exceeds the model rank");

    std::vector<TrialResult> results(static_cast<std::size_t>(cfg.trials));
#pragma omp parallel for schedule(dynamic)
    for (long t = 0; t < cfg.trials; ++t)
        results[static_cast<std::size_t>(t)] =
            rfm_trial(model, cfg, K, detail::trial_seed(cfg.seed, t));
    return reduce_trials(results);
}

std::vector<double> empirical_phi2(const SpectralModel& model, long n, double lambda,
                                   const std::vector<Weight>& weights,
                                   std::uint64_t seed) {
    if (model.is_power_law())
        throw DomainError("empirical_phi2: needs an explicit finite model");
    if (!(lambda > 0.0)) throw DomainError("empirical_phi2: lambda must be positive");
    const long d = static_cast<long>(model.rank());
    const auto& eig = model.eigenvalues();

    GaussStream rng(seed);
    Eigen::MatrixXd X(n, d);
    rng.fill(X);
    for (long k = 0; k < d; ++k) X.col(k) *= std::sqrt(eig[static_cast<std::size_t>(k)]);

    std::vector<double> out;
    out.reserve(weights.size());
    if (d > n) {
        Eigen::MatrixXd KL = X * X.transpose();
        KL.diagonal().array() += lambda;
        const Eigen::LLT<Eigen::MatrixXd> llt(KL);
        for (const Weight& w : weights) {
            switch (w.kind()) {
                case Weight::Kind::identity: {
                    // Tr(C (C+l)^-1) = n - l Tr((K+l)^-1)
                    const Eigen::MatrixXd S =
                        llt.solve(Eigen::MatrixXd::Identity(n, n));
                    out.push_back(static_cast<double>(n) - lambda * S.trace());
                    break;
                }
                case Weight::Kind::target_projector: {
                    const Eigen::Map<const Eigen::VectorXd> b(model.target_coeffs().data(), d);
                    const Eigen::VectorXd xb = X * b;
                    out.push_back(xb.dot(llt.solve(xb)));
                    break;
                }
                case Weight::Kind::diagonal: {
                    if (static_cast<long>(w.values().size()) != d)
                        throw DomainError("empirical_phi2: weight length mismatch");
                    const Eigen::Map<const Eigen::VectorXd> a(w.values().data(), d);
                    const Eigen::MatrixXd Ga = X * a.asDiagonal() * X.transpose();
                    out.push_back(llt.solve(Ga).trace());
                    break;
                }
            }
        }
        return out;
    }

    const Eigen::MatrixXd C = X.transpose() * X;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
    const Eigen::VectorXd& ev = es.eigenvalues();
    const Eigen::MatrixXd& Q = es.eigenvectors();
    const Eigen::ArrayXd filt = ev.array() / (ev.array() + lambda);
    for (const Weight& w : weights) {
        switch (w.kind()) {
            case Weight::Kind::identity:
                out.push_back(filt.sum());
                break;
            case Weight::Kind::target_projector: {
                const Eigen::Map<const Eigen::VectorXd> b(model.target_coeffs().data(), d);
                const Eigen::VectorXd qb = Q.transpose() * b;
                out.push_back((qb.array().square() * filt).sum());
                break;
            }
            case Weight::Kind::diagonal: {
                if (static_cast<long>(w.values().size()) != d)
                    throw DomainError("empirical_phi2: weight length mismatch");
                const Eigen::Map<const Eigen::VectorXd> a(w.values().data(), d);
                const Eigen::MatrixXd Qs = Q.array().square().matrix();
                out.push_back(a.dot(Qs * filt.matrix()));
                break;
            }
        }
    }
    return out;
}

PhiValues empirical_phi(const SpectralModel& model, long n, double lambda,
                        const Weight& weight, std::uint64_t seed) {
    if (model.is_power_law())
        throw DomainError("empirical_phi: needs an explicit finite model");
    if (!(lambda > 0.0)) throw DomainError("empirical_phi: lambda must be positive");
    const long d = static_cast<long>(model.rank());
    const auto& eig = model.eigenvalues();
    const Eigen::Map<const Eigen::VectorXd> sig(eig.data(), d);

    Eigen::VectorXd diag_a; // diagonal weight
    Eigen::VectorXd bvec;   // rank-one weight vector
    const bool is_rank1 = weight.kind() == Weight::Kind::target_projector;
    if (is_rank1) {
        bvec = Eigen::Map<const Eigen::VectorXd>(model.target_coeffs().data(), d);
    } else if (weight.kind() == Weight::Kind::identity) {
        diag_a = Eigen::VectorXd::Ones(d);
    } else {
        if (static_cast<long>(weight.values().size()) != d)
            throw DomainError("empirical_phi: weight length mismatch");
        diag_a = Eigen::Map<const Eigen::VectorXd>(weight.values().data(), d);
    }

    GaussStream rng(seed);
    Eigen::MatrixXd X(n, d);
    rng.fill(X);
    for (long k = 0; k < d; ++k) X.col(k) *= std::sqrt(eig[static_cast<std::size_t>(k)]);

    PhiValues out;
    const double nn = static_cast<double>(n);

    if (d > n) {
        // Dual route: (C + l)^-1 = (I - X^T S X) / l, S = (X X^T + l)^-1.
        Eigen::MatrixXd KL = X * X.transpose();
        KL.diagonal().array() += lambda;
        const Eigen::MatrixXd S =
            Eigen::LLT<Eigen::MatrixXd>(KL).solve(Eigen::MatrixXd::Identity(n, n));

        if (is_rank1) {
            const Eigen::VectorXd bs = (bvec.array() * sig.array().sqrt()).matrix();
            const Eigen::VectorXd xb = X * bvec;
            const Eigen::VectorXd xbs = X * bs;
            out.phi2 = xb.dot(S * xb);
            out.phi1 = (bs.squaredNorm() - xbs.dot(S * xbs)) / lambda;
            const Eigen::VectorXd v = (bs - X.transpose() * (S * xbs)) / lambda;
            out.phi3 = (sig.array() * v.array().square()).sum();
            out.phi4 = (S * xbs).squaredNorm() / nn;
            return out;
        }
        const Eigen::VectorXd as = diag_a.cwiseProduct(sig);
        const Eigen::MatrixXd Ga = X * diag_a.asDiagonal() * X.transpose();
        const Eigen::MatrixXd Gas = X * as.asDiagonal() * X.transpose();
        out.phi2 = S.cwiseProduct(Ga).sum();
        out.phi1 = (as.sum() - S.cwiseProduct(Gas).sum()) / lambda;
        // Tr(diag(as) R Sigma R) expanded through the dual resolvent.
        const Eigen::MatrixXd Gs = X * sig.asDiagonal() * X.transpose();
        const double t0 = (diag_a.array() * sig.array().square()).sum();
        const double t1 =
            S.cwiseProduct(X * as.cwiseProduct(sig).asDiagonal() * X.transpose()).sum();
        const double t2 = (Gas * S * Gs * S).trace();
        out.phi3 = (t0 - 2.0 * t1 + t2) / (lambda * lambda);
        out.phi4 = (S * Gas * S).trace() / nn;
        return out;
    }

    // Primal route through the eigendecomposition of C = X^T X.
    const Eigen::MatrixXd C = X.transpose() * X;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
    const Eigen::VectorXd& ev = es.eigenvalues();
    const Eigen::MatrixXd& Q = es.eigenvectors();
    const Eigen::ArrayXd den = ev.array() + lambda;

    if (is_rank1) {
        const Eigen::VectorXd bs = (bvec.array() * sig.array().sqrt()).matrix();
        const Eigen::VectorXd qb = Q.transpose() * bvec;
        const Eigen::VectorXd qbs = Q.transpose() * bs;
        out.phi1 = (qbs.array().square() / den).sum();
        out.phi2 = (qb.array().square() * ev.array() / den).sum();
        const Eigen::VectorXd v = Q * (qbs.array() / den).matrix();
        out.phi3 = (sig.array() * v.array().square()).sum();
        out.phi4 = (qbs.array().square() * ev.array() / den.square()).sum() / nn;
        return out;
    }
    const Eigen::MatrixXd Qs = Q.array().square().matrix();
    const Eigen::VectorXd as = diag_a.cwiseProduct(sig);
    out.phi1 = as.dot(Qs * den.inverse().matrix());
    out.phi2 = diag_a.dot(Qs * (ev.array() / den).matrix());
    const Eigen::MatrixXd R = Q * den.inverse().matrix().asDiagonal() * Q.transpose();
    const Eigen::MatrixXd RSR = R * sig.asDiagonal() * R;
    out.phi3 = (as.array() * RSR.diagonal().array()).sum();
    out.phi4 = as.dot(Qs * (ev.array() / den.square()).matrix()) / nn;
    return out;
}

} // namespace deteq
