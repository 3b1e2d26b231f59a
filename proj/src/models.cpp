#include "roughlyap/models.hpp"

#include <cmath>

namespace roughlyap {

std::vector<double> DriftField::operator()(const std::vector<double>& y) const
{
    std::vector<double> out(dim);
    f(y.data(), out.data());
    return out;
}

SystemSpec make_fhn(double eps, double mu, double I, double J)
{
    if (!(eps > 0.0) || !(mu > 0.0)) throw ParameterError("fhn: epsilon and mu must be positive");
    SystemSpec s;
    s.name = "fhn";
    s.params = {{"epsilon", eps}, {"mu", mu}, {"I", I}, {"J", J}};
    s.drift.dim = 2;
    s.drift.f = [=](const double* y, double* out) {
        const double v = y[0], w = y[1];
        out[0] = v - v * v * v / 3.0 - w + I;
        out[1] = eps * (v - mu * w + J);
    };
    s.drift.Df = [=](const double* y, double* out) {
        out[0] = 1.0 - y[0] * y[0];
        out[1] = -1.0;
        out[2] = eps;
        out[3] = -eps * mu;
    };
    s.drift.f0_norm = std::hypot(I, eps * J);
    // Frobenius bound of the Jacobian over the box
    s.drift.local_lipschitz = [=](const Box& box) {
        const double vmax = std::max(std::abs(box.lo[0]), std::abs(box.hi[0]));
        const bool zero_inside = box.lo[0] <= 0.0 && box.hi[0] >= 0.0;
        double a = std::max(std::abs(1.0 - vmax * vmax), zero_inside ? 1.0 : 0.0);
        if (!zero_inside) {
            const double vmin = std::min(std::abs(box.lo[0]), std::abs(box.hi[0]));
            a = std::max(a, std::abs(1.0 - vmin * vmin));
        }
        return std::sqrt(a * a + 1.0 + eps * eps + eps * eps * mu * mu);
    };
    return attach_diffusion(std::move(s), "none", 0.0);
}

SystemSpec make_pendulum(double sigma, double mu)
{
    if (!(sigma > 0.0) || !(mu > 0.0)) throw ParameterError("pendulum: sigma and mu must be positive");
    SystemSpec s;
    s.name = "pendulum";
    s.params = {{"sigma", sigma}, {"mu", mu}};
    const double s2 = sigma * sigma;
    s.drift.dim = 2;
    s.drift.f = [=](const double* y, double* out) {
        out[0] = y[1];
        out[1] = -s2 * std::sin(y[0]) - 2.0 * mu * y[1];
    };
    s.drift.Df = [=](const double* y, double* out) {
        out[0] = 0.0;
        out[1] = 1.0;
        out[2] = -s2 * std::cos(y[0]);
        out[3] = -2.0 * mu;
    };
    // spectral norm of [[0,1],[c,-2mu]] is increasing in c^2, so c^2 = sigma^4 is the sup
    const double tr = s2 * s2 + 1.0 + 4.0 * mu * mu;
    const double cf = std::sqrt(0.5 * (tr + std::sqrt(tr * tr - 4.0 * s2 * s2)));
    s.drift.lipschitz = cf;
    s.drift.local_lipschitz = [cf](const Box&) { return cf; };
    s.drift.f0_norm = 0.0;
    return attach_diffusion(std::move(s), "none", 0.0);
}

SystemSpec make_linear_dissipative(double a, const std::vector<double>& b)
{
    if (!(a > 0.0)) throw ParameterError("linear-dissipative: a must be positive");
    if (b.empty()) throw ParameterError("linear-dissipative: b must have the state dimension");
    SystemSpec s;
    s.name = "linear-dissipative";
    s.params["a"] = a;
    s.params["dim"] = static_cast<double>(b.size());
    double bb = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        s.params["b" + std::to_string(i + 1)] = b[i];
        bb += b[i] * b[i];
    }
    const std::size_t d = b.size();
    s.drift.dim = d;
    s.drift.f = [=](const double* y, double* out) {
        for (std::size_t i = 0; i < d; ++i) out[i] = -a * y[i] + b[i];
    };
    s.drift.Df = [=](const double*, double* out) {
        for (std::size_t i = 0; i < d * d; ++i) out[i] = 0.0;
        for (std::size_t i = 0; i < d; ++i) out[i * d + i] = -a;
    };
    s.drift.lipschitz = a;
    s.drift.local_lipschitz = [a](const Box&) { return a; };
    s.drift.f0_norm = std::sqrt(bb);
    s.drift.dissipativity = Dissipativity{bb / (2.0 * a), a / 2.0};
    return attach_diffusion(std::move(s), "none", 0.0);
}

SystemSpec attach_diffusion(SystemSpec spec, const std::string& kind, double C_g, std::size_t m)
{
    if (!(C_g >= 0.0) || !std::isfinite(C_g)) throw ParameterError("diffusion: C_g must be >= 0");
    const std::size_t d = spec.dim();
    if (m == 0) m = d;
    DiffusionField& g = spec.diffusion;
    g.d = d;
    g.m = m;
    g.C_g = C_g;
    g.kind = kind;
    const std::size_t r = std::min(d, m);
    if (kind == "none" || C_g == 0.0) {
        g.kind = "none";
        g.C_g = 0.0;
        g.zero_at_origin = true;
        g.g = [d, m](const double*, double* out) { std::fill(out, out + d * m, 0.0); };
        g.Dg = [d, m](const double*, double* out) { std::fill(out, out + d * m * d, 0.0); };
    } else if (kind == "constant") {
        g.zero_at_origin = false;
        g.g = [d, m, r, C_g](const double*, double* out) {
            std::fill(out, out + d * m, 0.0);
            for (std::size_t i = 0; i < r; ++i) out[i * m + i] = C_g;
        };
        g.Dg = [d, m](const double*, double* out) { std::fill(out, out + d * m * d, 0.0); };
    } else if (kind == "linear-bump" || kind == "vanishing-at-zero") {
        // h(u) = c0 + c1 tanh(u): sup|h| = c0+c1, |h'| <= c1, |h''| <= 0.77 c1, |h'''| <= 2 c1
        const bool vanish = kind == "vanishing-at-zero";
        const double c1 = 0.5 * C_g, c0 = vanish ? 0.0 : 0.5 * C_g;
        g.zero_at_origin = vanish;
        g.g = [=](const double* y, double* out) {
            std::fill(out, out + d * m, 0.0);
            for (std::size_t i = 0; i < r; ++i) out[i * m + i] = c0 + c1 * std::tanh(y[i]);
        };
        g.Dg = [=](const double* y, double* out) {
            std::fill(out, out + d * m * d, 0.0);
            for (std::size_t i = 0; i < r; ++i) {
                const double t = std::tanh(y[i]);
                out[(i * m + i) * d + i] = c1 * (1.0 - t * t);
            }
        };
    } else {
        throw ParameterError("unknown diffusion kind: " + kind);
    }
    return spec;
}

SystemSpec make_system(const std::string& name, const std::map<std::string, double>& params)
{
    auto get = [&](const std::string& k, double def) {
        auto it = params.find(k);
        return it == params.end() ? def : it->second;
    };
    if (name != "fhn" && name != "pendulum" && name != "linear-dissipative")
        throw ParameterError("unknown model: " + name);
    auto known = [&](const std::string& k) {
        if (name == "fhn") return k == "epsilon" || k == "mu" || k == "I" || k == "J";
        if (name == "pendulum") return k == "sigma" || k == "mu";
        return k == "a" || k == "dim" || (k.size() > 1 && k[0] == 'b' && k.find_first_not_of("0123456789", 1) == std::string::npos);
    };
    for (const auto& [k, v] : params) {
        if (!std::isfinite(v)) throw ParameterError("model parameter " + k + " is not finite");
        if (!known(k)) throw ParameterError("unknown parameter '" + k + "' for model " + name);
    }
    if (name == "fhn") return make_fhn(get("epsilon", 0.08), get("mu", 0.8), get("I", 0.5), get("J", 0.7));
    if (name == "pendulum") return make_pendulum(get("sigma", 1.0), get("mu", 0.5));
    if (name == "linear-dissipative") {
        const double dd = get("dim", 2.0);
        if (!(dd >= 1.0) || dd != std::floor(dd)) throw ParameterError("linear-dissipative: dim must be a positive integer");
        std::vector<double> b(static_cast<std::size_t>(dd));
        for (std::size_t i = 0; i < b.size(); ++i) b[i] = get("b" + std::to_string(i + 1), 0.0);
        return make_linear_dissipative(get("a", 1.0), b);
    }
    throw ParameterError("unknown model: " + name);
}

std::vector<std::string> model_names() { return {"fhn", "pendulum", "linear-dissipative"}; }

std::vector<double> fd_jacobian(const FieldFn& f, std::size_t d, const double* y, double h)
{
    std::vector<double> out(d * d), yp(y, y + d), ym(y, y + d), fp(d), fm(d);
    for (std::size_t k = 0; k < d; ++k) {
        yp[k] = y[k] + h;
        ym[k] = y[k] - h;
        f(yp.data(), fp.data());
        f(ym.data(), fm.data());
        for (std::size_t i = 0; i < d; ++i) out[i * d + k] = (fp[i] - fm[i]) / (2.0 * h);
        yp[k] = y[k];
        ym[k] = y[k];
    }
    return out;
}

} // namespace roughlyap
