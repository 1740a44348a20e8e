#ifndef DETEQ_SPECTRAL_MODEL_HPP
#define DETEQ_SPECTRAL_MODEL_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace deteq {

/// Which regression family the spectrum parameterizes: the covariance
/// spectrum of the data (linear ridge) or the squared singular values of
/// the feature operator (random-features ridge).
enum class ModelKind { linear, rfm };

/// The five target-weighted resolvent forms every equivalent needs,
/// evaluated at a common shift nu:
///   q_inv1      = <t, (L + nu)^-1 t>
///   q_lam_inv1  = <t, L (L + nu)^-1 t>
///   q_inv2      = <t, (L + nu)^-2 t>
///   q_lam_inv2  = <t, L (L + nu)^-2 t>
///   q_lam2_inv2 = <t, L^2 (L + nu)^-2 t>
struct QuadForms {
    double q_inv1 = 0.0;
    double q_lam_inv1 = 0.0;
    double q_inv2 = 0.0;
    double q_lam_inv2 = 0.0;
    double q_lam2_inv2 = 0.0;
};

struct DegreesOfFreedom {
    double df1 = 0.0; // Tr(L (L + nu)^-1)
    double df2 = 0.0; // Tr(L^2 (L + nu)^-2)
};

/// Population spectrum plus target coefficients. Either an explicit
/// finite pair of vectors, or a power-law generator
///   eigenvalue_k = k^-alpha,  coeff_k = k^-(1 + 2 alpha r)/2
/// whose infinite sums are evaluated by truncation plus an analytic
/// tail (Euler-Maclaurin with a closed-form tail integral); the
/// truncation point adapts until the remainder bound drops below
/// tail_tol relative.
class SpectralModel {
public:
    static SpectralModel power_law(double alpha, double r, double noise_var,
                                   double tail_tol = 1e-8,
                                   ModelKind kind = ModelKind::rfm);
    static SpectralModel finite(std::vector<double> eigenvalues,
                                std::vector<double> target_coeffs,
                                double noise_var,
                                ModelKind kind = ModelKind::linear);

    ModelKind kind() const { return kind_; }
    double noise_var() const { return noise_var_; }
    bool is_power_law() const { return power_law_; }
    bool is_finite_rank() const { return !power_law_; }

    /// Power-law parameters; DomainError on finite models.
    double alpha() const;
    double source_r() const;
    double tail_tol() const { return tail_tol_; }

    /// Rank of an explicit model; DomainError on power-law models.
    std::size_t rank() const;
    const std::vector<double>& eigenvalues() const;
    const std::vector<double>& target_coeffs() const;

    /// k-th eigenvalue (1-based); 0 past the rank of a finite model.
    double eigenvalue(std::size_t k) const;
    /// Sum of eigenvalues from index k on (1-based).
    double eigenvalue_tail_sum(std::size_t k) const;

    double trace() const;               // Tr(L)
    double trace_inverse() const;       // Tr(L^-1); diverges for power laws
    double coeff_norm_sq() const;       // <t, t>

    DegreesOfFreedom degrees_of_freedom(double nu) const;
    /// Tr(L (L + nu)^-2); satisfies df1 - df2 = nu * this.
    double trace_shift_inv2(double nu) const;

    QuadForms quad_forms(double nu) const;

    /// Power-law eigensum T^s_{delta,gamma}(nu) =
    /// sum_k k^(-s - delta*alpha) / (k^-alpha + nu)^gamma.
    /// Requires a power-law model, 0 <= delta <= gamma, and a convergent
    /// exponent s + delta*alpha > 1.
    double eigensum_T(int s, double delta, double gamma, double nu) const;

    /// Spectrum file format (header "# spectral_model v1"): either one
    /// "powerlaw alpha=... r=... sigma2=..." line or one
    /// "<eigenvalue> <coefficient>" pair per line.
    void save(std::ostream& os) const;
    static SpectralModel load(std::istream& is, ModelKind kind);
    void save_file(const std::string& path) const;
    static SpectralModel load_file(const std::string& path, ModelKind kind);

private:
    SpectralModel() = default;

    double pl_sum(double s, double delta, double gamma, double nu) const;

    ModelKind kind_ = ModelKind::linear;
    double noise_var_ = 0.0;
    bool power_law_ = false;
    double alpha_ = 0.0;
    double r_ = 0.0;
    double tail_tol_ = 1e-8;
    std::vector<double> eigs_;
    std::vector<double> coeffs_;
    std::vector<double> eig_suffix_; // eig_suffix_[k] = sum_{j >= k+1} eigs_[j]
    // Shared append-only cache of k^-alpha and k^-(1+2 alpha r); copies of
    // a model share it (the generator parameters are immutable).
    std::shared_ptr<struct PowerLawCache> cache_;
};

namespace detail {
/// Test seam: force the power-law truncation length to at least this
/// many terms (0 means the adaptive default). Used by the tail-control
/// tests to verify that doubling the truncation leaves every functional
/// within tail_tol.
extern std::size_t pl_forced_min_terms;

/// integral_u(a, g, z) = int_0^z u^(a-1) (1+u)^-g du for a > 0, z >= 0.
double integral_u(double a, double g, double z);
} // namespace detail

} // namespace deteq

#endif
