#include "roughlyap/lyapunov.hpp"

#include "json.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace roughlyap {

void StrongCert::validate() const
{
    if (!(lambda >= 0.0 && lambda < 1.0)) throw ParameterError("cert: lambda must lie in [0,1)");
    if (!(C_lambda > 0.0) || !(delta > 0.0)) throw ParameterError("cert: C_lambda and delta must be positive");
}

PerturbationSampler::PerturbationSampler(std::size_t dim, double lambda, std::size_t n_psi, std::size_t n_eta,
                                         std::uint64_t seed)
    : dim_(dim), lambda_(lambda), seed_(seed)
{
    if (dim < 1) throw ParameterError("sampler: dim must be >= 1");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ParameterError("sampler: lambda must be >= 0");
    if (n_psi < 1 || n_eta < 1) throw ParameterError("sampler: need at least one sample of each kind");
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    // Fills `count` vectors of length len: 0, +-lambda e_i, then alternating
    // sphere / interior draws. Collapses to the zero sample when lambda = 0.
    auto fill = [&](std::vector<double>& out, std::size_t count, std::size_t len, std::mt19937_64& rng) {
        if (lambda == 0.0) count = 1;
        out.assign(count * len, 0.0);
        std::size_t next = 1;
        for (std::size_t i = 0; i < len && next < count; ++i)
            for (double sgn : {1.0, -1.0}) {
                if (next >= count) break;
                out[next * len + i] = sgn * lambda;
                ++next;
            }
        for (bool sphere = true; next < count; ++next, sphere = !sphere) {
            double* v = out.data() + next * len;
            double nrm = 0.0;
            for (std::size_t i = 0; i < len; ++i) {
                v[i] = normal(rng);
                nrm += v[i] * v[i];
            }
            nrm = std::sqrt(nrm);
            const double r = sphere ? lambda : lambda * std::pow(unif(rng), 1.0 / static_cast<double>(len));
            for (std::size_t i = 0; i < len; ++i) v[i] *= r / nrm;
        }
    };
    std::mt19937_64 rng_psi(derive_seed(seed, 1)), rng_eta(derive_seed(seed, 2));
    fill(psi_, n_psi, dim * dim, rng_psi);
    fill(eta_, n_eta, dim, rng_eta);
}

double perturbed_sup(const double* grad, const DriftField& f, const double* z, const PerturbationSampler& s,
                     std::size_t* arg_psi, std::size_t* arg_eta)
{
    const std::size_t d = s.dim(), np = s.n_psi(), ne = s.n_eta();
    std::vector<double> pg(np * d), zp(d), fk(d);
    for (std::size_t j = 0; j < np; ++j) {
        const double* psi = s.psi(j);
        for (std::size_t b = 0; b < d; ++b) {
            double acc = 0.0;
            for (std::size_t a = 0; a < d; ++a) acc += grad[a] * psi[a * d + b];
            pg[j * d + b] = acc;
        }
    }
    double best = -std::numeric_limits<double>::infinity();
    std::size_t bj = 0, bk = 0;
    for (std::size_t k = 0; k < ne; ++k) {
        const double* eta = s.eta(k);
        for (std::size_t a = 0; a < d; ++a) zp[a] = z[a] + eta[a];
        f.f(zp.data(), fk.data());
        double base = 0.0;
        for (std::size_t a = 0; a < d; ++a) base += grad[a] * fk[a];
        for (std::size_t j = 0; j < np; ++j) {
            double v = base;
            for (std::size_t b = 0; b < d; ++b) v += pg[j * d + b] * fk[b];
            if (!std::isfinite(v)) return std::numeric_limits<double>::quiet_NaN();
            if (v > best) {
                best = v;
                bj = j;
                bk = k;
            }
        }
    }
    if (arg_psi) *arg_psi = bj;
    if (arg_eta) *arg_eta = bk;
    return best;
}

StrongCheckReport check_strong_condition(const LyapunovFn& V, const DriftField& f, const BoxGrid& domain,
                                         const StrongCert& cert, const PerturbationSampler& sampler, Exec exec)
{
    domain.box.validate();
    cert.validate();
    const std::size_t d = domain.box.dim();
    if (d != V.dim || d != f.dim || d != sampler.dim()) throw ParameterError("check: dimension mismatch");
    const std::size_t n = domain.size();
    std::vector<double> margin(n);
    const long nl = static_cast<long>(n);
#pragma omp parallel if (exec == Exec::Parallel)
    {
        std::vector<double> z(d), g(d);
#pragma omp for schedule(static)
        for (long i = 0; i < nl; ++i) {
            domain.point(static_cast<std::size_t>(i), z.data());
            const double v = V.V(z.data());
            V.gradV(z.data(), g.data());
            const double sup = perturbed_sup(g.data(), f, z.data(), sampler);
            const double m = cert.C_lambda - cert.delta * v - sup;
            margin[static_cast<std::size_t>(i)] = std::isfinite(m) ? m : std::numeric_limits<double>::quiet_NaN();
        }
    }
    StrongCheckReport r;
    r.points = n;
    r.worst_margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        if (std::isnan(margin[i])) {
            ++r.flagged;
            continue;
        }
        if (margin[i] < 0.0) ++r.failures;
        if (margin[i] < r.worst_margin) {
            r.worst_margin = margin[i];
            r.worst_index = i;
        }
    }
    const std::size_t evaluated = n - r.flagged;
    r.pass_rate = evaluated ? static_cast<double>(evaluated - r.failures) / static_cast<double>(evaluated) : 0.0;
    r.worst_point.resize(d);
    domain.point(r.worst_index, r.worst_point.data());
    return r;
}

namespace {

CertResult finish(double lambda, double C, double delta, const char* prov)
{
    CertResult r;
    r.cert = StrongCert{lambda, C, delta, prov};
    if (!(lambda >= 0.0 && lambda < 1.0))
        r.reason = "lambda outside [0,1)";
    else if (!(delta > 0.0))
        r.reason = "delta <= 0";
    else if (!(C > 0.0))
        r.reason = "C_lambda <= 0";
    else
        r.feasible = true;
    return r;
}

} // namespace

CertResult derive_cert_lipschitz(double d1, double d2, double L_V, double C_f, double f0_norm, double alpha,
                                 double C, double lambda)
{
    if (!(alpha > 0.0)) throw ParameterError("derive_cert_lipschitz: alpha must be positive");
    const double Cl = d1 + L_V * lambda * (2.0 * C_f * lambda + f0_norm - (C / alpha) * C_f);
    const double delta = d2 - L_V * C_f * lambda / alpha;
    return finish(lambda, Cl, delta, "derived-lipschitz");
}

CertResult derive_cert_lipschitz2(double d1, double d2, double L_V, double C_f, double K, double C, double lambda)
{
    const double Cl = d1 + L_V * lambda * (K * L_V * lambda - K * C + C_f);
    const double delta = d2 - K * L_V * lambda;
    return finish(lambda, Cl, delta, "derived-lipschitz2");
}

double max_feasible_lambda(const std::function<CertResult(double)>& derive, double tol)
{
    double lo = 0.0, hi = 1.0;
    if (!derive(lo).feasible) return 0.0;
    if (derive(std::nextafter(1.0, 0.0)).feasible) return std::nextafter(1.0, 0.0);
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (derive(mid).feasible ? lo : hi) = mid;
    }
    return lo;
}

FhnLyapunov fhn_lyapunov(double eps, double mu, double D, double C_lambda)
{
    if (!(eps > 0.0) || !(mu > 0.0)) throw ParameterError("fhn_lyapunov: epsilon and mu must be positive");
    if (!(D >= 1.0)) throw ParameterError("fhn_lyapunov: D must be >= 1");
    FhnLyapunov out;
    const double B = 6.0 / (eps * mu);
    out.B = B;
    out.D = D;
    LyapunovFn& V = out.V;
    V.name = "fhn";
    V.dim = 2;
    V.V = [B](const double* z) {
        const double v = z[0], w = z[1];
        return std::pow(1.0 + v * v * v * v + B * w * w, 0.25);
    };
    V.gradV = [B](const double* z, double* g) {
        const double v = z[0], w = z[1];
        const double s = std::pow(1.0 + v * v * v * v + B * w * w, 0.75);
        g[0] = v * v * v / s;
        g[1] = 0.5 * B * w / s;
    };
    // |v^3| / s <= 1; B|w| / (2 s) peaks at B w^2 = 2 with value sqrt(B) / (sqrt(2) 3^(3/4))
    V.L_V = std::sqrt(1.0 + B / (2.0 * std::pow(3.0, 1.5)));
    const double a = std::pow(std::min(2.0, B), 0.25);
    const double b = std::pow(1.0 + B / 2.0, 0.25);
    V.alpha = KBound{"poly", a, 0.5, [a](double r) { return a * std::sqrt(r); },
                     [a](double s) { return (s / a) * (s / a); }};
    V.beta = KBound{"poly", b, 1.0, [b](double r) { return b * (1.0 + r); }, {}};
    out.cert = StrongCert{1.0 / (12.0 * D), C_lambda, eps * mu / (12.0 * (2.0 + eps * mu)), "fhn-explicit"};
    return out;
}

double fhn_default_D(const SystemSpec& fhn, const Box& domain, std::size_t res, std::size_t n_samples,
                     std::uint64_t seed)
{
    if (fhn.name != "fhn") throw ParameterError("fhn_default_D needs the fhn model");
    const double eps = fhn.params.at("epsilon"), mu = fhn.params.at("mu");
    const double B = 6.0 / (eps * mu);
    const BoxGrid grid{domain, res};
    // lambda slightly below 1 so the perturbations stay in the admissible range
    const PerturbationSampler s(2, 1.0 - 1e-9, n_samples, n_samples, seed);
    double best = 1.0;
    std::vector<double> z(2), f0(2), fk(2), zp(2);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        grid.point(i, z.data());
        const double v = z[0], w = z[1];
        const double g[2] = {4.0 * v * v * v, 2.0 * B * w};
        fhn.drift.f(z.data(), f0.data());
        const double denom = v * v * v * v * v * v + w * w + 1.0;
        for (std::size_t k = 0; k < s.n_eta(); ++k) {
            zp[0] = v + s.eta(k)[0];
            zp[1] = w + s.eta(k)[1];
            fhn.drift.f(zp.data(), fk.data());
            for (std::size_t j = 0; j < s.n_psi(); ++j) {
                const double* p = s.psi(j);
                const double u0 = fk[0] + p[0] * fk[0] + p[1] * fk[1] - f0[0];
                const double u1 = fk[1] + p[2] * fk[0] + p[3] * fk[1] - f0[1];
                best = std::max(best, (g[0] * u0 + g[1] * u1) / denom);
            }
        }
    }
    return best;
}

LyapunovFn pendulum_lyapunov(double sigma, double mu)
{
    if (!(sigma > 0.0) || !(mu > 0.0)) throw ParameterError("pendulum_lyapunov: sigma and mu must be positive");
    const double s2 = sigma * sigma;
    LyapunovFn V;
    V.name = "pendulum";
    V.dim = 2;
    V.V = [s2](const double* z) { return std::sqrt(1.0 + 0.5 * z[1] * z[1] + s2 * (1.0 - std::cos(z[0]))); };
    V.gradV = [s2](const double* z, double* g) {
        const double v = std::sqrt(1.0 + 0.5 * z[1] * z[1] + s2 * (1.0 - std::cos(z[0])));
        g[0] = s2 * std::sin(z[0]) / (2.0 * v);
        g[1] = z[1] / (2.0 * v);
    };
    V.L_V = 1.0 + s2;
    V.alpha = KBound{"none", 0.0, 0.0, [](double) { return 0.0; }, {}};
    const double c = std::max(1.0, std::sqrt(0.5 * (1.0 + s2)));
    V.beta = KBound{"poly", c, 1.0, [c](double r) { return c * (1.0 + r); }, {}};
    V.classical = Dissipativity{2.0 * mu * (1.0 + s2), 2.0 * mu};
    return V;
}

double pendulum_K(double sigma, double mu)
{
    const double s4 = sigma * sigma * sigma * sigma;
    return std::sqrt(std::max(2.0 + 16.0 * mu * mu, 2.0 * s4));
}

LyapunovFn sqrt_quadratic_lyapunov(std::size_t dim, std::optional<Dissipativity> drift_diss)
{
    LyapunovFn V;
    V.name = "sqrt-quadratic";
    V.dim = dim;
    V.V = [dim](const double* z) {
        double s = 1.0;
        for (std::size_t i = 0; i < dim; ++i) s += z[i] * z[i];
        return std::sqrt(s);
    };
    V.gradV = [dim](const double* z, double* g) {
        double s = 1.0;
        for (std::size_t i = 0; i < dim; ++i) s += z[i] * z[i];
        s = std::sqrt(s);
        for (std::size_t i = 0; i < dim; ++i) g[i] = z[i] / s;
    };
    V.L_V = 1.0;
    V.alpha = KBound{"poly", 1.0, 1.0, [](double r) { return r; }, [](double s) { return s; }};
    V.beta = KBound{"poly", 1.0, 1.0, [](double r) { return 1.0 + r; }, {}};
    if (drift_diss) V.classical = Dissipativity{drift_diss->d1 + drift_diss->d2, drift_diss->d2};
    return V;
}

double h_term(double xi, const StrongCert& cert, double L_V, double C_p, double C_g, double p)
{
    if (xi == 0.0 || C_g == 0.0) return 0.0;
    const double k = 16.0 * C_p * C_g;
    return L_V * std::pow(k, p) * std::pow(cert.lambda, 1.0 - p) * std::pow(xi, p) + 8.0 * L_V * C_p * C_g * xi;
}

double decay_envelope(double V0, const StrongCert& cert, double t, double xi, double L_V, double C_p, double C_g,
                      double p)
{
    const double ratio = cert.C_lambda / cert.delta;
    return std::exp(-cert.delta * t) * (V0 - ratio) + ratio + h_term(xi, cert, L_V, C_p, C_g, p);
}

AbsorbingRadius absorbing_radius(const RoughPath& rp, const StrongCert& cert, double L_V, double C_p, double C_g,
                                 std::size_t K_trunc, const NormParams& np, const KBound& alpha, double eps,
                                 double at)
{
    const Grid& g = rp.grid();
    const double earliest = at - 1.0 - static_cast<double>(K_trunc);
    if (!g.has_node(earliest) || !g.has_node(at))
        throw ParameterError("absorbing_radius: path window does not cover [" + std::to_string(earliest) + ", " +
                             std::to_string(at) + "] on grid nodes");
    AbsorbingRadius out;
    for (std::size_t k = 0; k <= K_trunc; ++k) {
        const double hi = at - static_cast<double>(k);
        const double xi = p_var_norm(rp, g.index_of(hi - 1.0), g.index_of(hi), np);
        const double h = h_term(xi, cert, L_V, C_p, C_g, np.p);
        out.R_bar += std::exp(-static_cast<double>(k) * cert.delta) * h;
        out.max_H = std::max(out.max_H, h);
    }
    out.terms = K_trunc + 1;
    out.tail_bound = std::exp(-static_cast<double>(K_trunc) * cert.delta) / (1.0 - std::exp(-cert.delta)) * out.max_H;
    out.radius = alpha.inv ? alpha.inv(cert.C_lambda / cert.delta + out.R_bar + eps)
                           : std::numeric_limits<double>::quiet_NaN();
    return out;
}

std::string check_report_json(const StrongCheckReport& r, const BoxGrid& domain, const StrongCert& cert,
                              const PerturbationSampler& s)
{
    nlohmann::ordered_json j;
    j["domain"] = {{"lo", domain.box.lo}, {"hi", domain.box.hi}};
    j["resolution"] = domain.res;
    j["cert"] = {{"lambda", cert.lambda}, {"C_lambda", cert.C_lambda}, {"delta", cert.delta},
                 {"provenance", cert.provenance}};
    j["pass"] = r.pass();
    j["pass_rate"] = r.pass_rate;
    j["points"] = r.points;
    j["failures"] = r.failures;
    j["flagged"] = r.flagged;
    j["worst_margin"] = r.worst_margin;
    j["worst_point"] = r.worst_point;
    j["sampler"] = {{"lambda", s.lambda()}, {"n_psi", s.n_psi()}, {"n_eta", s.n_eta()}};
    j["seed"] = s.seed();
    return j.dump(2);
}

} // namespace roughlyap
