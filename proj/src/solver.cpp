#include "roughlyap/solver.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace roughlyap {

namespace {

bool finite_state(const double* y, std::size_t d)
{
    double s = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
        if (!std::isfinite(y[a])) return false;
        s += y[a] * y[a];
    }
    return s <= kBlowupNorm * kBlowupNorm;
}

/// Work buffers for one rough Euler step.
struct StepBuffers {
    std::vector<double> f, g, dg, dgg, dx;
    StepBuffers(std::size_t d, std::size_t m) : f(d), g(d * m), dg(d * m * d), dgg(d * m * m), dx(m) {}
};

void euler_step(const SystemSpec& sys, const RoughPath& noise, std::size_t k, const double* y, double* out,
                StepBuffers& b)
{
    const std::size_t d = sys.dim(), m = noise.dims();
    const double dt = noise.grid().dt;
    sys.drift.f(y, b.f.data());
    for (std::size_t i = 0; i < d; ++i) out[i] = y[i] + b.f[i] * dt;
    if (sys.diffusion.is_zero()) return;

    const double* lo = noise.path.node(k);
    const double* hi = noise.path.node(k + 1);
    const double* xx = noise.step_level2(k);
    for (std::size_t j = 0; j < m; ++j) b.dx[j] = hi[j] - lo[j];
    sys.diffusion.g(y, b.g.data());
    sys.diffusion.Dg(y, b.dg.data());
    // (Dg g)_{i j l} = sum_k dg_{ij}/dy_k g_{k l}
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t l = 0; l < m; ++l) {
                double acc = 0.0;
                for (std::size_t kk = 0; kk < d; ++kk) acc += b.dg[(i * m + j) * d + kk] * b.g[kk * m + l];
                b.dgg[(i * m + j) * m + l] = acc;
            }
    for (std::size_t i = 0; i < d; ++i) {
        double gx = 0.0, corr = 0.0;
        for (std::size_t j = 0; j < m; ++j) gx += b.g[i * m + j] * b.dx[j];
        // XX^{l j} = int x^l dx^j
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t l = 0; l < m; ++l) corr += b.dgg[(i * m + j) * m + l] * xx[l * m + j];
        out[i] += gx + corr;
    }
}

void check_dims(const SystemSpec& sys, const RoughPath& noise, std::size_t i, std::size_t j)
{
    if (!sys.diffusion.is_zero() && sys.noise_dims() != noise.dims())
        throw ParameterError("rough_euler: system noise dimension does not match the path");
    if (i > j || j > noise.grid().n_steps) throw ParameterError("rough_euler: interval outside the noise grid");
}

} // namespace

Trajectory rough_euler(const SystemSpec& sys, const RoughPath& noise, const std::vector<double>& y0, std::size_t i,
                       std::size_t j)
{
    check_dims(sys, noise, i, j);
    const std::size_t d = sys.dim();
    if (y0.size() != d) throw ParameterError("rough_euler: y0 has the wrong dimension");
    Trajectory tr;
    tr.grid = Grid{noise.grid().time(i), noise.grid().dt, j - i};
    tr.dim = d;
    tr.system = sys.name;
    tr.states.reserve((j - i + 1) * d);
    tr.states.insert(tr.states.end(), y0.begin(), y0.end());
    StepBuffers buf(d, noise.dims());
    std::vector<double> next(d);
    for (std::size_t k = i; k < j; ++k) {
        euler_step(sys, noise, k, tr.states.data() + (k - i) * d, next.data(), buf);
        if (!finite_state(next.data(), d)) {
            tr.blowup_step = k - i + 1;
            break;
        }
        tr.states.insert(tr.states.end(), next.begin(), next.end());
    }
    return tr;
}

bool rough_euler_final(const SystemSpec& sys, const RoughPath& noise, double* y, std::size_t i, std::size_t j)
{
    check_dims(sys, noise, i, j);
    const std::size_t d = sys.dim();
    StepBuffers buf(d, noise.dims());
    std::vector<double> next(d);
    for (std::size_t k = i; k < j; ++k) {
        euler_step(sys, noise, k, y, next.data(), buf);
        if (!finite_state(next.data(), d)) return false;
        std::copy(next.begin(), next.end(), y);
    }
    return true;
}

namespace {

void rk4_step(const DriftField& f, const double* y, double* out, double dt, std::vector<double>& w)
{
    const std::size_t d = f.dim;
    double* k1 = w.data();
    double* k2 = k1 + d;
    double* k3 = k2 + d;
    double* k4 = k3 + d;
    double* tmp = k4 + d;
    f.f(y, k1);
    for (std::size_t a = 0; a < d; ++a) tmp[a] = y[a] + 0.5 * dt * k1[a];
    f.f(tmp, k2);
    for (std::size_t a = 0; a < d; ++a) tmp[a] = y[a] + 0.5 * dt * k2[a];
    f.f(tmp, k3);
    for (std::size_t a = 0; a < d; ++a) tmp[a] = y[a] + dt * k3[a];
    f.f(tmp, k4);
    for (std::size_t a = 0; a < d; ++a) out[a] = y[a] + dt / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
}

std::size_t step_count(double T, double dt)
{
    if (!(dt > 0.0) || !(T >= 0.0)) throw ParameterError("ode: need dt > 0 and T >= 0");
    return static_cast<std::size_t>(std::llround(T / dt));
}

} // namespace

Trajectory ode_solve(const DriftField& drift, const std::vector<double>& y0, double t0, double T, double dt)
{
    const std::size_t n = step_count(T, dt), d = drift.dim;
    if (y0.size() != d) throw ParameterError("ode_solve: y0 has the wrong dimension");
    Trajectory tr;
    tr.grid = Grid{t0, dt, n};
    tr.dim = d;
    tr.states = y0;
    std::vector<double> w(5 * d), next(d);
    for (std::size_t k = 0; k < n; ++k) {
        rk4_step(drift, tr.states.data() + k * d, next.data(), dt, w);
        if (!finite_state(next.data(), d)) {
            tr.blowup_step = k + 1;
            break;
        }
        tr.states.insert(tr.states.end(), next.begin(), next.end());
    }
    return tr;
}

bool ode_final(const DriftField& drift, double* y, double T, double dt)
{
    const std::size_t n = step_count(T, dt), d = drift.dim;
    std::vector<double> w(5 * d), next(d);
    for (std::size_t k = 0; k < n; ++k) {
        rk4_step(drift, y, next.data(), dt, w);
        if (!finite_state(next.data(), d)) return false;
        std::copy(next.begin(), next.end(), y);
    }
    return true;
}

Grid NoiseConfig::grid() const
{
    if (!(dt > 0.0) || !(t_back >= 0.0) || !(t_fwd >= 0.0) || t_back + t_fwd <= 0.0)
        throw ParameterError("noise: need dt > 0 and a non-empty window");
    const double nb = t_back / dt, nf = t_fwd / dt;
    if (std::abs(nb - std::round(nb)) > 1e-9 * std::max(1.0, nb) ||
        std::abs(nf - std::round(nf)) > 1e-9 * std::max(1.0, nf))
        throw ParameterError("noise: window ends must be multiples of dt");
    return Grid{-static_cast<double>(std::llround(nb)) * dt, dt,
                static_cast<std::size_t>(std::llround(nb) + std::llround(nf))};
}

RoughPath make_window_noise(const NoiseConfig& cfg, std::size_t dims, std::uint64_t seed)
{
    FbmConfig f;
    f.hurst = cfg.hurst;
    f.dims = dims;
    f.grid = cfg.grid();
    f.seed = seed;
    f.method = cfg.method;
    return make_noise(f);
}

DecayReport verify_decay_bound(const Trajectory& traj, const LyapunovFn& V, const StrongCert& cert,
                               const RoughPath& noise, std::size_t first, double L_V, double C_p, double C_g,
                               const NormParams& np, std::size_t screen_stride)
{
    DecayReport r;
    const std::size_t n = traj.size();
    if (n == 0) return r;
    if (first + n - 1 > noise.grid().n_steps) throw ParameterError("verify_decay_bound: noise shorter than trajectory");
    const std::size_t last = first + n - 1;
    const double V0 = V.V(traj.state(0));
    std::vector<double> screen;
    if (last > first) screen = p_var_norm_prefix(noise, first, last, np, std::max<std::size_t>(1, screen_stride));
    std::vector<double> exact;
    auto excess_at = [&](std::size_t k, double xi) {
        const double t = traj.grid.dt * static_cast<double>(k);
        const double env = decay_envelope(V0, cert, t, xi, L_V, C_p, C_g, np.p);
        // rounding slack: at t = 0 the envelope equals V0 only up to cancellation
        return V.V(traj.state(k)) - env - 1e-12 * std::max(1.0, std::abs(env));
    };
    for (std::size_t k = 0; k < n; ++k) {
        ++r.checked;
        double ex = excess_at(k, k == 0 ? 0.0 : screen[k]);
        if (ex > 0.0 && k > 0 && screen_stride > 1) {
            if (exact.empty()) exact = p_var_norm_prefix(noise, first, last, np, 1);
            ++r.exact_evaluations;
            ex = excess_at(k, exact[k]);
        }
        r.max_excess = std::max(r.max_excess, ex);
        if (ex > 0.0) ++r.violations;
    }
    return r;
}

namespace {

double quantile(std::vector<double> v, double q)
{
    v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return std::isnan(x); }), v.end());
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

} // namespace

EnsembleResult ensemble(const SystemSpec& sys, const EnsembleConfig& cfg, const LyapunovFn* V, Exec exec)
{
    if (cfg.y0_set.empty() || cfg.n_seeds == 0) throw ParameterError("ensemble: need y0 values and seeds");
    if (cfg.record_stride == 0) throw ParameterError("ensemble: record_stride must be >= 1");
    if (cfg.cert && !V) throw ParameterError("ensemble: decay check needs a Lyapunov function");
    NoiseConfig nc = cfg.noise;
    nc.t_back = 0.0;
    const Grid grid = nc.grid();
    const std::size_t n_rec = grid.n_steps / cfg.record_stride + 1;
    const std::size_t runs = cfg.n_seeds * cfg.y0_set.size();
    const std::size_t m = sys.diffusion.is_zero() ? std::max<std::size_t>(sys.noise_dims(), 1) : sys.noise_dims();
    const NormParams np = nc.norm_params();

    EnsembleResult res;
    res.runs = runs;
    res.times.resize(n_rec);
    for (std::size_t r = 0; r < n_rec; ++r) res.times[r] = grid.time(r * cfg.record_stride);
    for (std::size_t s = 0; s < cfg.n_seeds; ++s) res.seeds.push_back(derive_seed(cfg.master_seed, s));

    std::vector<double> vals(V ? runs * n_rec : 0, std::numeric_limits<double>::quiet_NaN());
    std::vector<unsigned char> blown(runs, 0);
    std::vector<DecayReport> reports(runs);
    const long nr = static_cast<long>(runs);
#pragma omp parallel for schedule(dynamic) if (exec == Exec::Parallel)
    for (long r = 0; r < nr; ++r) {
        const std::size_t s = static_cast<std::size_t>(r) / cfg.y0_set.size();
        const std::size_t y = static_cast<std::size_t>(r) % cfg.y0_set.size();
        const RoughPath noise = make_window_noise(nc, m, res.seeds[s]);
        const Trajectory tr = rough_euler(sys, noise, cfg.y0_set[y], 0, grid.n_steps);
        blown[static_cast<std::size_t>(r)] = tr.blowup_step.has_value();
        if (V) {
            for (std::size_t q = 0; q < n_rec && q * cfg.record_stride < tr.size(); ++q)
                vals[static_cast<std::size_t>(r) * n_rec + q] = V->V(tr.state(q * cfg.record_stride));
            if (cfg.cert)
                reports[static_cast<std::size_t>(r)] = verify_decay_bound(
                    tr, *V, *cfg.cert, noise, 0, V->L_V, cfg.C_p, sys.diffusion.C_g, np, cfg.screen_stride);
        }
    }
    for (std::size_t r = 0; r < runs; ++r) {
        res.blowups += blown[r];
        res.violations += reports[r].violations;
        res.exact_evaluations += reports[r].exact_evaluations;
        res.max_excess = std::max(res.max_excess, reports[r].max_excess);
    }
    if (V) {
        res.p05.resize(n_rec);
        res.p50.resize(n_rec);
        res.p95.resize(n_rec);
        std::vector<double> col(runs);
        for (std::size_t q = 0; q < n_rec; ++q) {
            for (std::size_t r = 0; r < runs; ++r) col[r] = vals[r * n_rec + q];
            res.p05[q] = quantile(col, 0.05);
            res.p50[q] = quantile(col, 0.50);
            res.p95[q] = quantile(col, 0.95);
        }
        res.final_V.resize(runs);
        for (std::size_t r = 0; r < runs; ++r) res.final_V[r] = vals[r * n_rec + n_rec - 1];
    }
    nlohmann::ordered_json h;
    h["system"] = sys.name;
    h["params"] = sys.params;
    h["diffusion"] = {sys.diffusion.kind, sys.diffusion.C_g};
    h["noise"] = {nc.hurst, nc.dt, nc.t_fwd};
    h["y0"] = cfg.y0_set;
    h["n_seeds"] = cfg.n_seeds;
    h["master_seed"] = cfg.master_seed;
    res.config_hash = content_hash(h.dump());
    return res;
}

void write_trajectory_csv(const std::string& file, const Trajectory& traj)
{
    std::ofstream out(file);
    if (!out) throw ParameterError("cannot open " + file + " for writing");
    out << "t";
    for (std::size_t a = 0; a < traj.dim; ++a) out << ",y" << a + 1;
    out << "\n";
    char buf[32];
    for (std::size_t k = 0; k < traj.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", traj.grid.time(k));
        out << buf;
        for (std::size_t a = 0; a < traj.dim; ++a) {
            std::snprintf(buf, sizeof buf, "%.17g", traj.state(k)[a]);
            out << "," << buf;
        }
        out << "\n";
    }
}

std::string ensemble_json(const EnsembleResult& r)
{
    auto clean = [](const std::vector<double>& v) {
        nlohmann::json a = nlohmann::json::array();
        for (double x : v) a.push_back(std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr));
        return a;
    };
    nlohmann::ordered_json j;
    j["times"] = r.times;
    j["V_quantiles"] = {{"p05", clean(r.p05)}, {"p50", clean(r.p50)}, {"p95", clean(r.p95)}};
    j["violations"] = r.violations;
    j["flags"] = {{"runs", r.runs}, {"blowups", r.blowups}, {"exact_norm_evaluations", r.exact_evaluations}};
    j["max_excess"] = std::isfinite(r.max_excess) ? nlohmann::json(r.max_excess) : nlohmann::json(nullptr);
    j["seeds"] = r.seeds;
    j["config_hash"] = r.config_hash;
    return j.dump(2);
}

} // namespace roughlyap
