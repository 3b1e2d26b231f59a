#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "roughlyap/models.hpp"
#include "roughlyap/rough_core.hpp"

namespace roughlyap {

/// Comparison function kappa with class tag; poly means kappa(t) <= C (1 + t^rho).
struct KBound {
    std::string tag = "poly";  // "poly", "tempered", or "none" when no bound exists
    double C = 0.0;
    double rho = 0.0;
    std::function<double(double)> fn;
    std::function<double(double)> inv;  // empty when not invertible

    double operator()(double r) const { return fn(r); }
};

struct LyapunovFn {
    std::string name;
    std::size_t dim = 0;
    std::function<double(const double*)> V;
    FieldFn gradV;
    double L_V = 0.0;
    KBound alpha, beta;
    /// <gradV, f> <= d1 - d2 V for the drift this function was built for.
    std::optional<Dissipativity> classical;
};

struct StrongCert {
    double lambda = 0.0;
    double C_lambda = 0.0;
    double delta = 0.0;
    std::string provenance;  // derived-lipschitz | derived-lipschitz2 | fhn-explicit | checked-numerically

    void validate() const;
};

struct CertResult {
    bool feasible = false;
    StrongCert cert;
    std::string reason;
};

/// Perturbation samples: psi in the Frobenius ball of radius lambda, eta in the
/// Euclidean lambda-ball. Always contains psi = 0, eta = 0, the coordinate
/// boundary points and further sphere/interior draws.
class PerturbationSampler {
public:
    PerturbationSampler(std::size_t dim, double lambda, std::size_t n_psi = 64, std::size_t n_eta = 64,
                        std::uint64_t seed = 0);

    std::size_t dim() const { return dim_; }
    double lambda() const { return lambda_; }
    std::size_t n_psi() const { return psi_.size() / (dim_ * dim_); }
    std::size_t n_eta() const { return eta_.size() / dim_; }
    std::uint64_t seed() const { return seed_; }
    const double* psi(std::size_t j) const { return psi_.data() + j * dim_ * dim_; }
    const double* eta(std::size_t k) const { return eta_.data() + k * dim_; }

private:
    std::size_t dim_;
    double lambda_;
    std::uint64_t seed_;
    std::vector<double> psi_, eta_;
};

/// max over sampled (psi, eta) of <grad, (I + psi) f(z + eta)>; `arg` receives
/// the maximising (j, k) when non-null. Returns NaN on non-finite evaluations.
double perturbed_sup(const double* grad, const DriftField& f, const double* z, const PerturbationSampler& s,
                     std::size_t* arg_psi = nullptr, std::size_t* arg_eta = nullptr);

struct StrongCheckReport {
    std::size_t points = 0;
    std::size_t failures = 0;
    std::size_t flagged = 0;  // non-finite V or f, excluded
    double pass_rate = 0.0;
    double worst_margin = 0.0;
    std::size_t worst_index = 0;
    std::vector<double> worst_point;

    bool pass() const { return failures == 0 && points > flagged; }
};

/// Sweep the grid and check sup <gradV(z), (I+psi) f(z+eta)> <= C_lambda - delta V(z).
StrongCheckReport check_strong_condition(const LyapunovFn& V, const DriftField& f, const BoxGrid& domain,
                                         const StrongCert& cert, const PerturbationSampler& sampler,
                                         Exec exec = Exec::Parallel);

/// C_l = d1 + L_V l (2 C_f l + |f(0)| - (C/alpha) C_f), delta = d2 - L_V C_f l / alpha.
CertResult derive_cert_lipschitz(double d1, double d2, double L_V, double C_f, double f0_norm, double alpha,
                                 double C, double lambda);
/// C_l = d1 + L_V l (K L_V l - K C + C_f), delta = d2 - K L_V l.
CertResult derive_cert_lipschitz2(double d1, double d2, double L_V, double C_f, double K, double C,
                                  double lambda);
/// Largest lambda in (0,1) at which the certificate is feasible (bisection), 0 if none.
double max_feasible_lambda(const std::function<CertResult(double)>& derive, double tol = 1e-12);

struct FhnLyapunov {
    LyapunovFn V;
    StrongCert cert;  // delta from the closed form, lambda = 1/(12 D), C_lambda as configured
    double B = 0.0;
    double D = 0.0;
};

/// V = (1 + v^4 + B w^2)^(1/4), B = 6/(eps mu), delta = eps mu / (12 (2 + eps mu)).
FhnLyapunov fhn_lyapunov(double epsilon, double mu, double D, double C_lambda);

/// Default for the FHN bounding constant D: the largest ratio of the perturbation
/// excess <(4v^3, 2Bw), (I+psi) f(z+eta) - f(z)> to (v^6 + w^2 + 1), over a grid
/// of the domain with unit-radius perturbations; never below 1.
double fhn_default_D(const SystemSpec& fhn, const Box& domain, std::size_t res = 61, std::size_t n_samples = 16,
                     std::uint64_t seed = 7);

/// V = sqrt(1 + w^2/2 + sigma^2 (1 - cos v)), L_V = 1 + sigma^2, classical
/// constants (2 mu (1 + sigma^2), 2 mu). No radial lower bound (periodic in v).
LyapunovFn pendulum_lyapunov(double sigma, double mu);
/// sqrt((2 + 16 mu^2) v 2 sigma^4): |f(z)| <= K V(z) for the pendulum.
double pendulum_K(double sigma, double mu);

/// V = sqrt(1 + |z|^2) with alpha(r) = r, beta(r) = 1 + r, L_V = 1; classical
/// constants (d1 + d2, d2) from the drift's dissipativity when present.
LyapunovFn sqrt_quadratic_lyapunov(std::size_t dim, std::optional<Dissipativity> drift_diss = std::nullopt);

/// H(xi) = L_V (16 C_p C_g)^p lambda^(1-p) xi^p + 8 L_V C_p C_g xi.
double h_term(double xi, const StrongCert& cert, double L_V, double C_p, double C_g, double p);
/// e^{-delta t} (V0 - C/delta) + C/delta + H(xi).
double decay_envelope(double V0, const StrongCert& cert, double t, double xi, double L_V, double C_p, double C_g,
                      double p);

struct AbsorbingRadius {
    double R_bar = 0.0;
    double radius = 0.0;      // alpha^{-1}(C/delta + R_bar + eps); NaN if alpha has no inverse
    double tail_bound = 0.0;  // e^{-K delta} / (1 - e^{-delta}) * max H
    double max_H = 0.0;
    std::size_t terms = 0;
};

/// Truncated series sum_{k=0}^{K} e^{-k delta} H(norm on [at-1-k, at-k]).
AbsorbingRadius absorbing_radius(const RoughPath& rp, const StrongCert& cert, double L_V, double C_p, double C_g,
                                 std::size_t K_trunc, const NormParams& np, const KBound& alpha,
                                 double eps = 1e-3, double at = 0.0);

std::string check_report_json(const StrongCheckReport& r, const BoxGrid& domain, const StrongCert& cert,
                              const PerturbationSampler& s);

} // namespace roughlyap
