#include "roughlyap/attractor.hpp"

#include "json.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <unordered_set>

namespace roughlyap {

void PointCloud::validate() const
{
    if (dim == 0) throw ParameterError("point cloud: dimension must be positive");
    if (points.size() % dim != 0) throw ParameterError("point cloud: storage is not a multiple of the dimension");
    for (double v : points)
        if (!std::isfinite(v)) throw ParameterError("point cloud: non-finite entry");
}

double hausdorff_semi(const PointCloud& A, const PointCloud& B, Exec exec)
{
    if (A.empty() || B.empty()) throw ParameterError("hausdorff_semi: empty point cloud");
    if (A.dim != B.dim) throw ParameterError("hausdorff_semi: dimension mismatch");
    const std::size_t d = A.dim, nb = B.size();
    const long na = static_cast<long>(A.size());
    double result = 0.0;
#pragma omp parallel if (exec == Exec::Parallel)
    {
        // points whose nearest distance cannot raise the running max stop early
        double local = 0.0;
#pragma omp for schedule(static) nowait
        for (long i = 0; i < na; ++i) {
            const double* a = A.point(static_cast<std::size_t>(i));
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < nb; ++k) {
                const double* b = B.point(k);
                double s = 0.0;
                for (std::size_t c = 0; c < d; ++c) s += (a[c] - b[c]) * (a[c] - b[c]);
                if (s < best) {
                    best = s;
                    if (best <= local) break;
                }
            }
            local = std::max(local, best);
        }
#pragma omp critical
        result = std::max(result, local);
    }
    return std::sqrt(result);
}

namespace {

struct KeyHash {
    std::size_t operator()(const std::vector<long long>& k) const
    {
        std::uint64_t h = 0x9e3779b97f4a7c15ULL;
        for (long long v : k) h = mix64(h ^ static_cast<std::uint64_t>(v));
        return static_cast<std::size_t>(h);
    }
};

} // namespace

PointCloud voxel_dedup(const PointCloud& c, double voxel)
{
    if (!(voxel > 0.0)) throw ParameterError("voxel_dedup: voxel must be positive");
    PointCloud out;
    out.dim = c.dim;
    out.label = c.label;
    std::unordered_set<std::vector<long long>, KeyHash> seen;
    std::vector<long long> key(c.dim);
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double* p = c.point(i);
        for (std::size_t a = 0; a < c.dim; ++a) key[a] = static_cast<long long>(std::floor(p[a] / voxel));
        if (seen.insert(key).second) out.push(p);
    }
    return out;
}

PointCloud fill_ball(const std::vector<double>& center, double radius, std::size_t res)
{
    if (center.empty()) throw ParameterError("fill_ball: empty center");
    if (!(radius >= 0.0) || !std::isfinite(radius)) throw ParameterError("fill_ball: radius must be finite, >= 0");
    if (res == 0) throw ParameterError("fill_ball: resolution must be positive");
    const std::size_t d = center.size();
    PointCloud c;
    c.dim = d;
    c.label = "ball";
    if (res == 1 || radius == 0.0) {
        c.push(center.data());
        return c;
    }
    Box box;
    for (double x : center) {
        box.lo.push_back(x - radius);
        box.hi.push_back(x + radius);
    }
    const BoxGrid grid{box, res};
    std::vector<double> z(d);
    const double lim = radius * radius * (1.0 + 1e-12);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        grid.point(k, z.data());
        double s = 0.0;
        for (std::size_t a = 0; a < d; ++a) s += (z[a] - center[a]) * (z[a] - center[a]);
        if (s <= lim) c.push(z.data());
    }
    return c;
}

EvolveResult evolve_cloud(const SystemSpec& sys, const RoughPath& noise, const PointCloud& cloud, std::size_t i,
                          std::size_t j, Exec exec)
{
    if (cloud.dim != sys.dim()) throw ParameterError("evolve_cloud: cloud dimension does not match the system");
    const std::size_t d = cloud.dim, n = cloud.size();
    std::vector<double> work(cloud.points);
    std::vector<unsigned char> ok(n, 1);
    const long nl = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic, 16) if (exec == Exec::Parallel)
    for (long p = 0; p < nl; ++p)
        ok[static_cast<std::size_t>(p)] = rough_euler_final(sys, noise, work.data() + p * static_cast<long>(d), i, j);
    EvolveResult r;
    r.cloud.dim = d;
    r.cloud.label = cloud.label;
    for (std::size_t p = 0; p < n; ++p) {
        if (ok[p])
            r.cloud.push(work.data() + p * d);
        else
            ++r.dropped;
    }
    return r;
}

RoughPath zero_noise(const Grid& grid, std::size_t dims)
{
    grid.validate();
    if (dims == 0) throw ParameterError("zero_noise: dims must be positive");
    RoughPath rp;
    rp.path.grid = grid;
    rp.path.dims = dims;
    rp.path.values.assign(grid.nodes() * dims, 0.0);
    rp.path.meta.generator = "zero";
    rp.level2.assign(grid.n_steps * dims * dims, 0.0);
    return rp;
}

void AttractorConfig::validate() const
{
    if (horizons.empty()) throw ParameterError("attractor: horizons must be non-empty");
    for (std::size_t k = 0; k < horizons.size(); ++k) {
        if (!(horizons[k] > 0.0)) throw ParameterError("attractor: horizons must be positive");
        if (k > 0 && !(horizons[k] > horizons[k - 1])) throw ParameterError("attractor: horizons must increase");
    }
    if (init_resolution == 0) throw ParameterError("attractor: init_resolution must be positive");
    if (!(radius_cap > 0.0)) throw ParameterError("attractor: radius_cap must be positive");
    if (!(C_p > 0.0)) throw ParameterError("attractor: C_p must be positive");
}

namespace {

nlohmann::ordered_json system_json(const SystemSpec& sys)
{
    nlohmann::ordered_json j;
    j["name"] = sys.name;
    j["params"] = sys.params;
    j["diffusion"] = {{"kind", sys.diffusion.kind}, {"C_g", sys.diffusion.C_g}, {"m", sys.diffusion.m}};
    return j;
}

nlohmann::ordered_json attractor_json(const AttractorConfig& c)
{
    nlohmann::ordered_json j;
    j["hurst"] = c.noise.hurst;
    j["dt"] = c.noise.dt;
    j["horizons"] = c.horizons;
    j["init_resolution"] = c.init_resolution;
    j["center"] = c.center;
    j["radius_cap"] = c.radius_cap;
    j["absorbing_terms"] = c.absorbing_terms;
    j["C_p"] = c.C_p;
    j["seed"] = c.seed;
    return j;
}

NoiseConfig window_config(const AttractorConfig& cfg, const BallSource& ball, double t_fwd)
{
    NoiseConfig nc = cfg.noise;
    const double margin = ball.cert && ball.V ? static_cast<double>(cfg.absorbing_terms) + 1.0 : 0.0;
    nc.t_back = cfg.horizons.back() + margin;
    nc.t_fwd = t_fwd;
    return nc;
}

std::size_t noise_dims(const SystemSpec& sys) { return std::max<std::size_t>(sys.noise_dims(), 1); }

RoughPath draw_noise(const SystemSpec& sys, const NoiseConfig& nc, std::uint64_t seed)
{
    if (sys.diffusion.is_zero()) return zero_noise(nc.grid(), noise_dims(sys));
    return make_window_noise(nc, noise_dims(sys), seed);
}

double mean_of(const std::vector<double>& v)
{
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? std::numeric_limits<double>::quiet_NaN() : s / static_cast<double>(v.size());
}

double stderr_of(const std::vector<double>& v)
{
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

TableRow make_row(double param, std::vector<double> values, std::size_t flagged)
{
    TableRow r;
    r.parameter = param;
    r.mean = mean_of(values);
    r.std_err = stderr_of(values);
    r.n_flagged = flagged;
    r.values = std::move(values);
    return r;
}

AttractorConfig single_horizon(const AttractorConfig& c, std::uint64_t seed)
{
    AttractorConfig s = c;
    s.horizons = {c.horizons.back()};
    s.seed = seed;
    return s;
}

} // namespace

AttractorEstimate pullback_on_path(const SystemSpec& sys, const RoughPath& noise, const AttractorConfig& cfg,
                                   const BallSource& ball, double at, Exec exec)
{
    cfg.validate();
    const std::size_t d = sys.dim();
    std::vector<double> center = cfg.center.empty() ? std::vector<double>(d, 0.0) : cfg.center;
    if (center.size() != d) throw ParameterError("attractor: center has the wrong dimension");
    const Grid& g = noise.grid();
    const std::size_t j = g.index_of(at);
    AttractorEstimate e;
    e.seed = cfg.seed;
    e.horizons = cfg.horizons;
    const NormParams np = cfg.noise.norm_params();
    for (double n : cfg.horizons) {
        const double start = at - n;
        const std::size_t i = g.index_of(start);
        double raw = std::numeric_limits<double>::quiet_NaN();
        if (ball.cert && ball.V)
            raw = absorbing_radius(noise, *ball.cert, ball.V->L_V, cfg.C_p, sys.diffusion.C_g, cfg.absorbing_terms,
                                   np, ball.V->alpha, 1e-3, start)
                      .radius;
        const double radius = std::isnan(raw) ? cfg.radius_cap : std::min(raw, cfg.radius_cap);
        EvolveResult ev = evolve_cloud(sys, noise, fill_ball(center, radius, cfg.init_resolution), i, j, exec);
        ev.cloud.label = "horizon " + std::to_string(n);
        e.dropped += ev.dropped;
        e.radii.push_back(radius);
        e.raw_radii.push_back(raw);
        e.clouds.push_back(std::move(ev.cloud));
    }
    for (std::size_t k = 0; k + 1 < e.clouds.size(); ++k) {
        if (e.clouds[k].empty() || e.clouds[k + 1].empty())
            throw ComputationError("attractor: every point of a cloud blew up");
        e.history.push_back(hausdorff_semi(e.clouds[k], e.clouds[k + 1], exec));
    }
    e.cloud = e.clouds.back();
    if (e.cloud.empty()) throw ComputationError("attractor: every point of the estimate blew up");
    nlohmann::ordered_json h;
    h["system"] = system_json(sys);
    h["attractor"] = attractor_json(cfg);
    h["at"] = at;
    h["noise_hash"] = content_hash(std::string(reinterpret_cast<const char*>(noise.path.values.data()),
                                               noise.path.values.size() * sizeof(double)));
    e.config_hash = content_hash(h.dump());
    return e;
}

RoughPath attractor_noise(const SystemSpec& sys, const AttractorConfig& cfg, const BallSource& ball, double t_fwd)
{
    cfg.validate();
    return draw_noise(sys, window_config(cfg, ball, t_fwd), cfg.seed);
}

AttractorEstimate pullback_attractor(const SystemSpec& sys, const BallSource& ball, const AttractorConfig& cfg,
                                     double t_fwd, Exec exec)
{
    const RoughPath noise = attractor_noise(sys, cfg, ball, t_fwd);
    return pullback_on_path(sys, noise, cfg, ball, 0.0, exec);
}

namespace {

void record_run(const DriftField& f, std::vector<double> y, double T, double clip, double dt, std::size_t stride,
                std::vector<double>& out)
{
    const std::size_t d = f.dim;
    const std::size_t n = static_cast<std::size_t>(std::llround(T / dt));
    const std::size_t first = static_cast<std::size_t>(std::llround(clip / dt));
    for (std::size_t k = 0; k <= n; ++k) {
        if (k >= first && (k - first) % stride == 0) out.insert(out.end(), y.begin(), y.end());
        if (k == n) break;
        if (!ode_final(f, y.data(), dt, dt)) return;
    }
    (void)d;
}

bool newton(const DriftField& f, std::vector<double>& y)
{
    const std::size_t d = f.dim;
    Eigen::VectorXd fy(d);
    Eigen::MatrixXd J(d, d);
    std::vector<double> jac(d * d);
    for (int it = 0; it < 60; ++it) {
        f.f(y.data(), fy.data());
        if (!fy.allFinite()) return false;
        if (fy.norm() < 1e-13) return true;
        f.Df(y.data(), jac.data());
        for (std::size_t r = 0; r < d; ++r)
            for (std::size_t c = 0; c < d; ++c) J(static_cast<long>(r), static_cast<long>(c)) = jac[r * d + c];
        const Eigen::VectorXd step = J.fullPivLu().solve(-fy);
        if (!step.allFinite()) return false;
        for (std::size_t a = 0; a < d; ++a) y[a] += step[static_cast<long>(a)];
    }
    f.f(y.data(), fy.data());
    return fy.allFinite() && fy.norm() < 1e-10;
}

double max_real_eig(const DriftField& f, const std::vector<double>& y)
{
    const std::size_t d = f.dim;
    std::vector<double> jac(d * d);
    f.Df(y.data(), jac.data());
    Eigen::MatrixXd J(d, d);
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < d; ++c) J(static_cast<long>(r), static_cast<long>(c)) = jac[r * d + c];
    return Eigen::EigenSolver<Eigen::MatrixXd>(J, false).eigenvalues().real().maxCoeff();
}

} // namespace

DeterministicAttractor deterministic_attractor(const DriftField& f, const OracleConfig& cfg, Exec exec)
{
    const std::size_t d = f.dim;
    cfg.starts.validate();
    if (cfg.starts.dim() != d) throw ParameterError("oracle: start box has the wrong dimension");
    if (!(cfg.dt > 0.0) || !(cfg.T > 0.0) || !(cfg.clip >= 0.0) || cfg.clip > cfg.T || cfg.record_stride == 0 ||
        !(cfg.voxel > 0.0))
        throw ParameterError("oracle: invalid integration settings");
    const BoxGrid grid{cfg.starts, cfg.res};
    const std::size_t ns = grid.size();

    // clipped long runs
    std::vector<std::vector<double>> runs(ns);
    std::vector<std::vector<double>> roots(ns);
    std::vector<unsigned char> root_ok(ns, 0);
    const long nl = static_cast<long>(ns);
#pragma omp parallel for schedule(dynamic) if (exec == Exec::Parallel)
    for (long s = 0; s < nl; ++s) {
        std::vector<double> y(d);
        grid.point(static_cast<std::size_t>(s), y.data());
        record_run(f, y, cfg.T, cfg.clip, cfg.dt, cfg.record_stride, runs[static_cast<std::size_t>(s)]);
        root_ok[static_cast<std::size_t>(s)] = newton(f, y);
        roots[static_cast<std::size_t>(s)] = y;
    }

    DeterministicAttractor out;
    for (std::size_t s = 0; s < ns; ++s) {
        if (!root_ok[s] || !cfg.starts.contains(roots[s].data())) continue;
        bool dup = false;
        for (const auto& e : out.equilibria) {
            double dist = 0.0;
            for (std::size_t a = 0; a < d; ++a) dist += (e[a] - roots[s][a]) * (e[a] - roots[s][a]);
            if (std::sqrt(dist) < 1e-6) dup = true;
        }
        if (!dup) {
            out.equilibria.push_back(roots[s]);
            out.unstable.push_back(max_real_eig(f, roots[s]) > 0.0);
        }
    }

    // trajectories leaving unstable equilibria
    std::vector<std::vector<double>> starts;
    std::mt19937_64 rng(derive_seed(0x5eed, d));
    std::normal_distribution<double> normal;
    for (std::size_t e = 0; e < out.equilibria.size(); ++e) {
        if (!out.unstable[e]) continue;
        for (std::size_t k = 0; k < cfg.fill_angles; ++k) {
            std::vector<double> dir(d, 0.0);
            if (d == 1) {
                dir[0] = k % 2 == 0 ? 1.0 : -1.0;
            } else if (d == 2) {
                const double th = 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(cfg.fill_angles);
                dir[0] = std::cos(th);
                dir[1] = std::sin(th);
            } else {
                double nn = 0.0;
                for (auto& v : dir) {
                    v = normal(rng);
                    nn += v * v;
                }
                for (auto& v : dir) v /= std::sqrt(nn);
            }
            std::vector<double> y = out.equilibria[e];
            for (std::size_t a = 0; a < d; ++a) y[a] += cfg.fill_radius * dir[a];
            starts.push_back(std::move(y));
        }
    }
    std::vector<std::vector<double>> fills(starts.size());
    const long nf = static_cast<long>(starts.size());
#pragma omp parallel for schedule(dynamic) if (exec == Exec::Parallel)
    for (long s = 0; s < nf; ++s)
        record_run(f, starts[static_cast<std::size_t>(s)], cfg.fill_T, 0.0, cfg.dt, cfg.record_stride,
                   fills[static_cast<std::size_t>(s)]);

    PointCloud all;
    all.dim = d;
    all.label = "deterministic attractor";
    for (const auto& e : out.equilibria) all.push(e.data());
    for (const auto& r : runs) all.points.insert(all.points.end(), r.begin(), r.end());
    for (const auto& r : fills) all.points.insert(all.points.end(), r.begin(), r.end());
    out.cloud = voxel_dedup(all, cfg.voxel);
    return out;
}

ExperimentTable semicontinuity_experiment(const SystemSpec& sys, const BallSource& ball,
                                          const SemicontinuityConfig& cfg, const PointCloud& A0, Exec exec)
{
    cfg.attractor.validate();
    if (cfg.C_g_list.empty() || cfg.n_seeds == 0) throw ParameterError("semicontinuity: need C_g values and seeds");
    for (std::size_t k = 0; k < cfg.C_g_list.size(); ++k) {
        if (!(cfg.C_g_list[k] > 0.0)) throw ParameterError("semicontinuity: C_g values must be positive");
        if (k > 0 && !(cfg.C_g_list[k] < cfg.C_g_list[k - 1]))
            throw ParameterError("semicontinuity: C_g values must strictly decrease");
    }
    const std::size_t nc = cfg.C_g_list.size();
    std::vector<std::vector<double>> vals(nc);
    std::vector<std::size_t> flagged(nc, 0);
    std::vector<std::uint64_t> seeds;
    for (std::size_t s = 0; s < cfg.n_seeds; ++s) {
        const std::uint64_t seed = derive_seed(cfg.master_seed, s);
        seeds.push_back(seed);
        const AttractorConfig ac = single_horizon(cfg.attractor, seed);
        const RoughPath noise = make_window_noise(window_config(ac, ball, 0.0), noise_dims(sys), seed);
        for (std::size_t c = 0; c < nc; ++c) {
            const SystemSpec sc = attach_diffusion(sys, cfg.diffusion, cfg.C_g_list[c], sys.noise_dims());
            const AttractorEstimate e = pullback_on_path(sc, noise, ac, ball, 0.0, exec);
            flagged[c] += e.dropped;
            vals[c].push_back(hausdorff_semi(e.cloud, A0, exec));
        }
    }
    ExperimentTable t;
    t.parameter = "C_g";
    t.value = "mean_dH";
    for (std::size_t c = 0; c < nc; ++c) t.rows.push_back(make_row(cfg.C_g_list[c], vals[c], flagged[c]));
    nlohmann::ordered_json p;
    p["experiment"] = "semicontinuity";
    p["system"] = system_json(sys);
    p["attractor"] = attractor_json(cfg.attractor);
    p["diffusion"] = cfg.diffusion;
    p["C_g_list"] = cfg.C_g_list;
    p["master_seed"] = cfg.master_seed;
    p["seeds"] = seeds;
    p["oracle_points"] = A0.size();
    p["content_hash"] = content_hash(p.dump());
    t.provenance = p.dump(2);
    return t;
}

ExperimentTable stepsize_experiment(const SystemSpec& sys, const StepsizeConfig& cfg, Exec exec)
{
    cfg.attractor.validate();
    if (cfg.steps.empty() || cfg.n_seeds == 0) throw ParameterError("stepsize: need steps and seeds");
    const double dt = cfg.attractor.noise.dt;
    std::vector<std::size_t> strides;
    for (std::size_t k = 0; k < cfg.steps.size(); ++k) {
        const double step = cfg.steps[k];
        if (!(step > 0.0) || (k > 0 && !(step < cfg.steps[k - 1])))
            throw ParameterError("stepsize: steps must be positive and strictly decreasing");
        const double r = step / dt;
        if (std::abs(r - std::round(r)) > 1e-9 * std::max(1.0, r) || std::round(r) < 1.0)
            throw ParameterError("stepsize: step " + std::to_string(step) + " is not a multiple of the noise dt");
        strides.push_back(static_cast<std::size_t>(std::llround(r)));
    }
    if (strides.back() != 1) throw ParameterError("stepsize: the smallest step must equal the noise dt");
    const std::size_t ns = cfg.steps.size();
    std::vector<std::vector<double>> vals(ns);
    std::vector<std::size_t> flagged(ns, 0);
    std::vector<std::uint64_t> seeds;
    const BallSource none;
    for (std::size_t s = 0; s < cfg.n_seeds; ++s) {
        const std::uint64_t seed = derive_seed(cfg.master_seed, s);
        seeds.push_back(seed);
        const AttractorConfig ac = single_horizon(cfg.attractor, seed);
        const RoughPath noise = draw_noise(sys, window_config(ac, none, 0.0), seed);
        std::vector<PointCloud> est(ns);
        for (std::size_t k = 0; k < ns; ++k) {
            const RoughPath rp = strides[k] == 1 ? noise : coarsen(noise, strides[k]);
            const AttractorEstimate e = pullback_on_path(sys, rp, ac, none, 0.0, exec);
            flagged[k] += e.dropped;
            est[k] = e.cloud;
        }
        for (std::size_t k = 0; k < ns; ++k) vals[k].push_back(hausdorff_semi(est[k], est.back(), exec));
    }
    ExperimentTable t;
    t.parameter = "step";
    t.value = "mean_dH";
    for (std::size_t k = 0; k < ns; ++k) t.rows.push_back(make_row(cfg.steps[k], vals[k], flagged[k]));
    nlohmann::ordered_json p;
    p["experiment"] = "stepsize";
    p["system"] = system_json(sys);
    p["attractor"] = attractor_json(cfg.attractor);
    p["steps"] = cfg.steps;
    p["master_seed"] = cfg.master_seed;
    p["seeds"] = seeds;
    p["content_hash"] = content_hash(p.dump());
    t.provenance = p.dump(2);
    return t;
}

ExperimentTable dyadic_experiment(const SystemSpec& sys, const DyadicConfig& cfg, Exec exec)
{
    cfg.attractor.validate();
    if (cfg.levels.empty() || cfg.n_seeds == 0) throw ParameterError("dyadic: need levels and seeds");
    const double L = -std::log2(cfg.attractor.noise.dt);
    if (std::abs(L - std::round(L)) > 1e-12 || L < 0.0) throw ParameterError("dyadic: noise dt must be 2^-L");
    const int full = static_cast<int>(std::lround(L));
    for (std::size_t k = 0; k < cfg.levels.size(); ++k) {
        if (cfg.levels[k] < 0 || cfg.levels[k] > full) throw ParameterError("dyadic: level outside [0, L]");
        if (k > 0 && cfg.levels[k] <= cfg.levels[k - 1]) throw ParameterError("dyadic: levels must increase");
    }
    const std::size_t nl = cfg.levels.size();
    std::vector<std::vector<double>> vals(nl);
    std::vector<std::size_t> flagged(nl, 0);
    std::vector<std::uint64_t> seeds;
    const BallSource none;
    for (std::size_t s = 0; s < cfg.n_seeds; ++s) {
        const std::uint64_t seed = derive_seed(cfg.master_seed, s);
        seeds.push_back(seed);
        const AttractorConfig ac = single_horizon(cfg.attractor, seed);
        const RoughPath noise = draw_noise(sys, window_config(ac, none, 0.0), seed);
        const AttractorEstimate ref = pullback_on_path(sys, noise, ac, none, 0.0, exec);
        for (std::size_t k = 0; k < nl; ++k) {
            const int lev = cfg.levels[k];
            const RoughPath rp =
                lev == full ? noise : refine_linear(dyadic_approx(noise, lev), std::size_t{1} << (full - lev));
            const AttractorEstimate e = pullback_on_path(sys, rp, ac, none, 0.0, exec);
            flagged[k] += e.dropped;
            vals[k].push_back(hausdorff_semi(e.cloud, ref.cloud, exec));
        }
    }
    ExperimentTable t;
    t.parameter = "level";
    t.value = "mean_dH";
    for (std::size_t k = 0; k < nl; ++k)
        t.rows.push_back(make_row(static_cast<double>(cfg.levels[k]), vals[k], flagged[k]));
    nlohmann::ordered_json p;
    p["experiment"] = "dyadic";
    p["system"] = system_json(sys);
    p["attractor"] = attractor_json(cfg.attractor);
    p["levels"] = cfg.levels;
    p["master_seed"] = cfg.master_seed;
    p["seeds"] = seeds;
    p["content_hash"] = content_hash(p.dump());
    t.provenance = p.dump(2);
    return t;
}

SlopeFit fit_log_slope(const Trajectory& tr, double domain_radius, double floor)
{
    SlopeFit r;
    if (tr.blowup_step) r.escaped = true;
    double st = 0.0, sl = 0.0, stt = 0.0, stl = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < tr.size(); ++k) {
        const double* y = tr.state(k);
        double s = 0.0;
        for (std::size_t a = 0; a < tr.dim; ++a) s += y[a] * y[a];
        const double norm = std::sqrt(s);
        if (norm > domain_radius) {
            r.escaped = true;
            break;
        }
        if (!(norm > floor)) break;
        const double t = tr.grid.time(k), l = std::log(norm);
        st += t;
        sl += l;
        stt += t * t;
        stl += t * l;
        ++n;
    }
    if (n < 2) {
        r.degenerate = true;
        return r;
    }
    const double nn = static_cast<double>(n);
    r.slope = (nn * stl - st * sl) / (nn * stt - st * st);
    return r;
}

ExperimentTable local_stability_experiment(const SystemSpec& sys, const LocalStabilityConfig& cfg, Exec exec)
{
    const std::size_t d = sys.dim();
    if (cfg.C_g_list.empty() || cfg.y0_radii.empty() || cfg.n_seeds == 0 || cfg.directions == 0)
        throw ParameterError("local stability: need C_g values, radii, directions and seeds");
    std::vector<double> f0(d), zero(d, 0.0);
    sys.drift.f(zero.data(), f0.data());
    for (double v : f0)
        if (std::abs(v) > 1e-12) throw ParameterError("local stability: drift must vanish at the origin");
    NoiseConfig nc = cfg.noise;
    nc.t_back = 0.0;
    const Grid grid = nc.grid();

    std::vector<std::vector<double>> y0s;
    for (double r : cfg.y0_radii)
        for (std::size_t k = 0; k < cfg.directions; ++k) {
            std::vector<double> y(d, 0.0);
            const double th = 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(cfg.directions);
            if (d == 1) {
                y[0] = r * (k % 2 == 0 ? 1.0 : -1.0);
            } else {
                y[0] = r * std::cos(th);
                y[1] = r * std::sin(th);
            }
            y0s.push_back(std::move(y));
        }
    std::vector<std::uint64_t> seeds;
    for (std::size_t s = 0; s < cfg.n_seeds; ++s) seeds.push_back(derive_seed(cfg.master_seed, s));

    const std::size_t m = noise_dims(sys);
    std::vector<RoughPath> noises(cfg.n_seeds);
    const long nsl = static_cast<long>(cfg.n_seeds);
#pragma omp parallel for schedule(dynamic) if (exec == Exec::Parallel)
    for (long s = 0; s < nsl; ++s)
        noises[static_cast<std::size_t>(s)] = make_window_noise(nc, m, seeds[static_cast<std::size_t>(s)]);

    ExperimentTable t;
    t.parameter = "C_g";
    t.value = "mean_slope";
    std::size_t escaped_total = 0, degenerate_total = 0;
    for (double C_g : cfg.C_g_list) {
        const SystemSpec sc = attach_diffusion(sys, cfg.diffusion, C_g, sys.noise_dims());
        if (!sc.diffusion.zero_at_origin) throw ParameterError("local stability: diffusion must vanish at the origin");
        const std::size_t runs = cfg.n_seeds * y0s.size();
        std::vector<SlopeFit> fits(runs);
        const long rl = static_cast<long>(runs);
#pragma omp parallel for schedule(dynamic) if (exec == Exec::Parallel)
        for (long r = 0; r < rl; ++r) {
            const std::size_t s = static_cast<std::size_t>(r) / y0s.size(), y = static_cast<std::size_t>(r) % y0s.size();
            fits[static_cast<std::size_t>(r)] =
                fit_log_slope(rough_euler(sc, noises[s], y0s[y], 0, grid.n_steps), cfg.domain_radius, cfg.floor);
        }
        std::vector<double> slopes;
        std::size_t flagged = 0;
        for (const auto& f : fits) {
            if (f.escaped || f.degenerate) {
                ++flagged;
                escaped_total += f.escaped;
                degenerate_total += f.degenerate && !f.escaped;
            } else {
                slopes.push_back(f.slope);
            }
        }
        t.rows.push_back(make_row(C_g, std::move(slopes), flagged));
    }
    nlohmann::ordered_json p;
    p["experiment"] = "local_stability";
    p["system"] = system_json(sys);
    p["diffusion"] = cfg.diffusion;
    p["C_g_list"] = cfg.C_g_list;
    p["noise"] = {{"hurst", nc.hurst}, {"dt", nc.dt}, {"T", nc.t_fwd}};
    p["y0_radii"] = cfg.y0_radii;
    p["directions"] = cfg.directions;
    p["domain_radius"] = cfg.domain_radius;
    p["master_seed"] = cfg.master_seed;
    p["seeds"] = seeds;
    p["escaped"] = escaped_total;
    p["degenerate"] = degenerate_total;
    p["content_hash"] = content_hash(p.dump());
    t.provenance = p.dump(2);
    return t;
}

namespace {

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

void write_cloud_csv(const std::string& file, const PointCloud& c)
{
    std::ofstream out(file);
    if (!out) throw ParameterError("cannot open " + file + " for writing");
    for (std::size_t a = 0; a < c.dim; ++a) out << (a ? "," : "") << "y" << a + 1;
    out << "\n";
    for (std::size_t i = 0; i < c.size(); ++i) {
        for (std::size_t a = 0; a < c.dim; ++a) out << (a ? "," : "") << fmt(c.point(i)[a]);
        out << "\n";
    }
}

void write_table_csv(const std::string& file, const ExperimentTable& t)
{
    std::ofstream out(file);
    if (!out) throw ParameterError("cannot open " + file + " for writing");
    out << t.parameter << "," << t.value << ",stderr,n_flagged\n";
    for (const auto& r : t.rows)
        out << fmt(r.parameter) << "," << fmt(r.mean) << "," << fmt(r.std_err) << "," << r.n_flagged << "\n";
}

std::string estimate_json(const AttractorEstimate& e)
{
    auto clean = [](const std::vector<double>& v) {
        nlohmann::json a = nlohmann::json::array();
        for (double x : v) a.push_back(std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr));
        return a;
    };
    nlohmann::ordered_json j;
    j["horizons"] = e.horizons;
    j["convergence_history"] = e.history;
    j["radii"] = e.radii;
    j["absorbing_radii"] = clean(e.raw_radii);
    j["cloud_points"] = e.cloud.size();
    j["dropped"] = e.dropped;
    j["seed"] = e.seed;
    j["config_hash"] = e.config_hash;
    return j.dump(2);
}

} // namespace roughlyap
