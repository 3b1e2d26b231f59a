#include "roughlyap/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "roughlyap/attractor.hpp"
#include "roughlyap/greedy.hpp"
#include "roughlyap/lyapnet.hpp"
#include "roughlyap/lyapunov.hpp"
#include "roughlyap/models.hpp"
#include "roughlyap/rough_core.hpp"
#include "roughlyap/solver.hpp"

namespace roughlyap::cli {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Output directory plus the resolved config; started once parsing has succeeded.
struct Context {
    json resolved;
    fs::path dir;
    bool plot = false;
    std::uint64_t seed = 0;
    std::ostream* log = nullptr;

    void start() const
    {
        fs::create_directories(dir);
        write("resolved_config.json", resolved.dump(2) + "\n");
    }
    std::string path(const std::string& name) const { return (dir / name).string(); }
    void write(const std::string& name, const std::string& text) const
    {
        std::ofstream out(path(name));
        if (!out) throw ParameterError("cannot open " + path(name) + " for writing");
        out << text;
    }
    /// Companion gnuplot script for a CSV table.
    void plot_table(const std::string& csv, const std::string& title, const std::string& using_spec,
                    const std::string& style, bool logx = false, bool logy = false) const
    {
        if (!plot) return;
        std::string s = "set datafile separator ','\nset key autotitle columnhead\n";
        s += "set title '" + title + "'\n";
        if (logx) s += "set logscale x\n";
        if (logy) s += "set logscale y\n";
        s += "plot '" + csv + "' using " + using_spec + " with " + style + "\n";
        write(fs::path(csv).stem().string() + ".gp", s);
    }
};

FbmMethod parse_method(const std::string& m)
{
    if (m == "auto") return FbmMethod::Auto;
    if (m == "circulant") return FbmMethod::Circulant;
    if (m == "cholesky") return FbmMethod::Cholesky;
    throw ConfigError("unknown fbm method '" + m + "' (auto, circulant, cholesky)");
}

FbmConfig parse_fbm(Section s, std::uint64_t seed)
{
    FbmConfig c;
    c.hurst = s.num("hurst", 0.4);
    c.dims = s.count("dims", 1);
    c.grid = Grid{s.num("t0", 0.0), s.num("dt", 1.0 / 1024.0), s.count("n_steps", 1024)};
    c.method = parse_method(s.str("method", "auto"));
    c.seed = seed;
    s.finish();
    c.grid.validate();
    if (!(c.hurst > 0.0 && c.hurst < 1.0) || c.dims == 0) throw ConfigError("fbm: need 0 < hurst < 1 and dims >= 1");
    return c;
}

struct ModelSpec {
    std::string name;
    std::map<std::string, double> params;
    std::string kind = "none";
    double C_g = 0.0;
    std::size_t m = 0;

    SystemSpec build() const { return attach_diffusion(make_system(name, params), kind, C_g, m); }
};

ModelSpec parse_model(Section s)
{
    ModelSpec m;
    m.name = s.str("name");
    m.params = s.num_map("params");
    Section d = s.sub("diffusion");
    m.kind = d.str("kind", "none");
    m.C_g = d.num("C_g", 0.0);
    m.m = d.count("m", 0);
    d.finish();
    s.finish();
    m.build();  // validates names and values
    return m;
}

NoiseConfig parse_noise(Section s)
{
    NoiseConfig n;
    n.hurst = s.num("hurst", 0.4);
    n.dt = s.num("dt", 1e-3);
    n.t_fwd = s.num("T", 1.0);
    n.method = parse_method(s.str("method", "auto"));
    s.finish();
    n.grid();
    n.norm_params().validate();
    return n;
}

Box parse_box(Section& s)
{
    Box b{s.nums("lo"), s.nums("hi")};
    b.validate();
    return b;
}

struct CertSpec {
    std::string source;
    std::optional<double> lambda, C_lambda, delta, D, K;
    double C = 0.0;
    double lambda_fraction = 0.5;
    std::optional<double> alpha;
};

CertSpec parse_cert(Section s, const std::string& model)
{
    CertSpec c;
    c.source = s.str("source", model == "fhn" ? "fhn-explicit" : "classical");
    auto opt = [&](const char* key) -> std::optional<double> {
        if (!s.has(key)) {
            s.num(key, 0.0);
            return std::nullopt;
        }
        return s.num(key);
    };
    c.lambda = opt("lambda");
    c.C_lambda = opt("C_lambda");
    c.delta = opt("delta");
    c.D = opt("D");
    c.K = opt("K");
    c.alpha = opt("alpha");
    c.C = s.num("C", 0.0);
    c.lambda_fraction = s.num("lambda_fraction", 0.5);
    s.finish();
    const std::vector<std::string> known{"fhn-explicit", "classical", "derived-lipschitz", "derived-lipschitz2",
                                         "manual"};
    if (std::find(known.begin(), known.end(), c.source) == known.end())
        throw ConfigError("cert.source: unknown '" + c.source + "'");
    if (c.source == "fhn-explicit" && model != "fhn") throw ConfigError("cert.source fhn-explicit needs the fhn model");
    if (c.source == "manual" && (!c.lambda || !c.C_lambda || !c.delta))
        throw ConfigError("cert: manual source needs lambda, C_lambda and delta");
    if (!(c.lambda_fraction > 0.0 && c.lambda_fraction <= 1.0))
        throw ConfigError("cert.lambda_fraction must lie in (0, 1]");
    return c;
}

LyapunovFn model_lyapunov(const SystemSpec& sys)
{
    if (sys.name == "fhn") return fhn_lyapunov(sys.params.at("epsilon"), sys.params.at("mu"), 1.0, 1.0).V;
    if (sys.name == "pendulum") return pendulum_lyapunov(sys.params.at("sigma"), sys.params.at("mu"));
    return sqrt_quadratic_lyapunov(sys.dim(), sys.drift.dissipativity);
}

struct CertSetup {
    LyapunovFn V;
    StrongCert cert;
    std::optional<double> D;
};

CertSetup build_cert(const CertSpec& c, const SystemSpec& sys, const Box& d_domain)
{
    CertSetup out;
    if (c.source == "fhn-explicit") {
        const double D = c.D ? *c.D : fhn_default_D(sys, d_domain);
        const FhnLyapunov f = fhn_lyapunov(sys.params.at("epsilon"), sys.params.at("mu"), D, c.C_lambda.value_or(3.0));
        out.V = f.V;
        out.cert = f.cert;
        out.D = D;
        if (c.lambda) out.cert.lambda = *c.lambda;
        if (c.delta) out.cert.delta = *c.delta;
        out.cert.validate();
        return out;
    }
    out.V = model_lyapunov(sys);
    if (c.source == "manual") {
        out.cert = StrongCert{*c.lambda, *c.C_lambda, *c.delta, "manual"};
        out.cert.validate();
        return out;
    }
    if (!out.V.classical) throw ParameterError("cert: the model Lyapunov function has no classical constants");
    const Dissipativity cl = *out.V.classical;
    if (c.source == "classical") {
        out.cert = StrongCert{0.0, c.C_lambda.value_or(cl.d1), c.delta.value_or(cl.d2), "classical"};
        out.cert.validate();
        return out;
    }
    if (!sys.drift.lipschitz) throw ParameterError("cert: derived certificates need a global drift Lipschitz constant");
    const double C_f = *sys.drift.lipschitz;
    std::function<CertResult(double)> derive;
    if (c.source == "derived-lipschitz2") {
        double K = 0.0;
        if (c.K)
            K = *c.K;
        else if (sys.name == "pendulum")
            K = pendulum_K(sys.params.at("sigma"), sys.params.at("mu"));
        else
            throw ParameterError("cert: derived-lipschitz2 needs K for this model");
        derive = [=, &out](double l) { return derive_cert_lipschitz2(cl.d1, cl.d2, out.V.L_V, C_f, K, c.C, l); };
    } else {
        const double alpha = c.alpha.value_or(out.V.alpha.C);
        const double f0 = sys.drift.f0_norm;
        derive = [=, &out](double l) {
            return derive_cert_lipschitz(cl.d1, cl.d2, out.V.L_V, C_f, f0, alpha, c.C, l);
        };
    }
    const double lambda = c.lambda ? *c.lambda : c.lambda_fraction * max_feasible_lambda(derive);
    const CertResult r = derive(lambda);
    if (!r.feasible) throw ParameterError("cert: infeasible at lambda = " + fmt(lambda) + ": " + r.reason);
    out.cert = r.cert;
    return out;
}

ordered_json cert_json(const StrongCert& c)
{
    return {{"lambda", c.lambda}, {"C_lambda", c.C_lambda}, {"delta", c.delta}, {"provenance", c.provenance}};
}

// --- commands -------------------------------------------------------------

int cmd_fbm(Section& root, Context& ctx)
{
    const FbmConfig cfg = parse_fbm(root.sub("fbm"), ctx.seed);
    const std::string mode = root.str("mode", "path");
    const std::size_t samples = root.count("samples", 10000);
    const double tol = root.num("tolerance", 0.04);
    root.finish();
    if (mode != "path" && mode != "summary") throw ConfigError("mode: expected path or summary");
    ctx.start();
    if (mode == "path") {
        const PathSample p = generate_fbm(cfg);
        write_path_csv(ctx.path("fbm_path.csv"), p);
        write_path_meta(ctx.path("fbm_path.meta.json"), p);
        ctx.plot_table("fbm_path.csv", "fBm path", "1:2", "lines");
        *ctx.log << "wrote " << ctx.path("fbm_path.csv") << "\n";
        return kPass;
    }
    const auto rows = fbm_variance_scaling(cfg, samples);
    std::string csv = "lag,mean_sq\n";
    for (const auto& r : rows) csv += fmt(r.lag) + "," + fmt(r.mean_sq) + "\n";
    ctx.write("scaling.csv", csv);
    const double slope = loglog_slope(rows);
    const bool pass = std::abs(slope - 2.0 * cfg.hurst) <= tol;
    ordered_json j{{"hurst", cfg.hurst},  {"samples", samples}, {"slope", slope},
                   {"expected", 2.0 * cfg.hurst}, {"tolerance", tol}, {"pass", pass}};
    ctx.write("scaling.json", j.dump(2) + "\n");
    ctx.plot_table("scaling.csv", "variance scaling", "1:2", "linespoints", true, true);
    *ctx.log << "slope " << slope << " (expected " << 2.0 * cfg.hurst << ")\n";
    return pass ? kPass : kVerifyFail;
}

int cmd_lift(Section& root, Context& ctx)
{
    const std::string input = root.str("input", "");
    const std::string meta = root.str("meta", "");
    FbmConfig fc;
    if (input.empty()) fc = parse_fbm(root.sub("fbm"), ctx.seed);
    root.finish();
    ctx.start();
    const RoughPath rp = input.empty() ? make_noise(fc) : read_path_csv(input, meta);
    write_path_csv(ctx.path("lifted_path.csv"), rp);
    write_path_meta(ctx.path("lifted_path.meta.json"), rp.path);
    *ctx.log << "wrote " << ctx.path("lifted_path.csv") << "\n";
    return kPass;
}

int cmd_norms(Section& root, Context& ctx)
{
    const std::string input = root.str("input", "");
    const std::string meta = root.str("meta", "");
    FbmConfig fc;
    if (input.empty()) fc = parse_fbm(root.sub("fbm"), ctx.seed);
    const double hurst = root.num("hurst", input.empty() ? fc.hurst : 0.4);
    NormParams np = NormParams::for_hurst(hurst);
    if (root.has("alpha") || root.has("nu"))
        np = NormParams::from_alpha(root.num("alpha", np.alpha), root.num("nu", np.nu));
    const std::vector<int> iv = root.ints("interval", std::vector<int>{});
    const double holder_alpha = root.num("holder_alpha", np.alpha);
    root.finish();
    np.validate();
    ctx.start();
    const RoughPath rp = input.empty() ? make_noise(fc) : read_path_csv(input, meta);
    std::size_t i = 0, j = rp.grid().n_steps;
    if (!iv.empty()) {
        if (iv.size() != 2 || iv[0] < 0 || iv[1] < iv[0]) throw ParameterError("interval: expected [i, j], i <= j");
        i = static_cast<std::size_t>(iv[0]);
        j = static_cast<std::size_t>(iv[1]);
    }
    const PVarTerms t = p_var_terms(rp, i, j, np);
    ordered_json out{{"interval", {i, j}},
                     {"params", {{"p", np.p}, {"q", np.q}, {"alpha", np.alpha}, {"nu", np.nu}}},
                     {"path_sum", t.path_sum},
                     {"level2_sum", t.level2_sum},
                     {"p_var_norm", t.norm},
                     {"p_variation_sum", p_variation_sum(rp.path, i, j, np.p)}};
    if (j > i) out["holder"] = {{"alpha", holder_alpha}, {"value", holder_norm(rp.path, i, j, holder_alpha)}};
    ctx.write("norms.json", out.dump(2) + "\n");
    *ctx.log << "p-var norm " << t.norm << "\n";
    return kPass;
}

int cmd_greedy(Section& root, Context& ctx)
{
    const FbmConfig fc = parse_fbm(root.sub("fbm"), ctx.seed);
    GreedyConfig g;
    g.lambda = root.num("lambda", 0.5);
    g.C_p = root.num("C_p", 4.0);
    g.C_g = root.num("C_g", 0.05);
    g.params = NormParams::for_hurst(root.num("hurst", fc.hurst));
    root.finish();
    g.validate();
    ctx.start();
    const RoughPath rp = make_noise(fc);
    const std::size_t n = rp.grid().n_steps;
    const GreedyPartition part = greedy_times(rp, 0, n, g);
    const CountBound b = count_bound_report(part, rp, 0, n, g);
    ordered_json j = ordered_json::parse(partition_json(part));
    j["count"] = b.N;
    j["bound"] = b.bound;
    j["total_norm"] = b.total_norm;
    j["bound_ok"] = b.ok;
    ctx.write("greedy.json", j.dump(2) + "\n");
    *ctx.log << "N = " << b.N << ", bound " << b.bound << (b.ok ? " (ok)" : " (violated)") << "\n";
    return b.ok ? kPass : kVerifyFail;
}

int cmd_simulate(Section& root, Context& ctx)
{
    const ModelSpec ms = parse_model(root.sub("model"));
    const SystemSpec sys = ms.build();
    EnsembleConfig ec;
    ec.noise = parse_noise(root.sub("noise"));
    ec.y0_set = root.points("y0", std::vector<std::vector<double>>{std::vector<double>(sys.dim(), 0.0)});
    ec.n_seeds = root.count("n_seeds", 1);
    ec.record_stride = root.count("record_stride", 1);
    ec.master_seed = ctx.seed;
    const bool want_V = root.flag("lyapunov", true);
    Section chk = root.sub("check");
    const bool check = chk.flag("enabled", false);
    ec.C_p = chk.num("C_p", 4.0);
    ec.screen_stride = chk.count("screen_stride", 16);
    chk.finish();
    std::optional<CertSpec> cs;
    if (check || root.has("cert")) cs = parse_cert(root.sub("cert"), ms.name);
    root.finish();
    for (const auto& y : ec.y0_set)
        if (y.size() != sys.dim()) throw ConfigError("y0: every point needs the state dimension");
    if (ec.n_seeds == 0 || ec.record_stride == 0) throw ConfigError("n_seeds and record_stride must be >= 1");
    ctx.start();

    std::optional<CertSetup> setup;
    if (cs) setup = build_cert(*cs, sys, Box::cube(sys.dim(), 3.0));
    LyapunovFn V = setup ? setup->V : model_lyapunov(sys);
    if (check) ec.cert = setup->cert;
    const EnsembleResult r = ensemble(sys, ec, want_V || check ? &V : nullptr);
    ordered_json j = ordered_json::parse(ensemble_json(r));
    if (setup) j["cert"] = cert_json(setup->cert);
    ctx.write("ensemble.json", j.dump(2) + "\n");
    if (want_V || check) {
        std::string csv = "t,p05,p50,p95\n";
        for (std::size_t k = 0; k < r.times.size(); ++k)
            csv += fmt(r.times[k]) + "," + fmt(r.p05[k]) + "," + fmt(r.p50[k]) + "," + fmt(r.p95[k]) + "\n";
        ctx.write("V_quantiles.csv", csv);
        ctx.plot_table("V_quantiles.csv", "V(y_t) quantiles", "1:3:2:4", "yerrorlines");
    }
    const RoughPath noise = make_window_noise(ec.noise, std::max<std::size_t>(sys.noise_dims(), 1), r.seeds[0]);
    const Trajectory tr = rough_euler(sys, noise, ec.y0_set[0], 0, noise.grid().n_steps);
    write_trajectory_csv(ctx.path("trajectory.csv"), tr);
    ctx.plot_table("trajectory.csv", "trajectory", "2:3", "lines");
    *ctx.log << r.runs << " runs, " << r.blowups << " blow-ups, " << r.violations << " decay violations\n";
    return r.violations == 0 ? kPass : kVerifyFail;
}

int cmd_verify(Section& root, Context& ctx)
{
    const ModelSpec ms = parse_model(root.sub("model"));
    const SystemSpec sys = ms.build();
    const std::string lyap = root.str("lyapunov", "model");
    if (lyap != "model" && lyap != "net") throw ConfigError("lyapunov: expected model or net");
    const std::string checkpoint = root.str("checkpoint", "");
    Section dom = root.sub("domain");
    const BoxGrid grid{parse_box(dom), dom.count("res", 200)};
    dom.finish();
    Section smp = root.sub("sampler");
    const std::size_t n_psi = smp.count("n_psi", 64), n_eta = smp.count("n_eta", 64);
    smp.finish();
    std::optional<CertSpec> cs;
    double eps = 0.0, threshold = 0.99;
    std::optional<double> delta_bar, C_bar, lambda;
    if (lyap == "model") {
        cs = parse_cert(root.sub("cert"), ms.name);
    } else {
        if (checkpoint.empty()) throw ConfigError("checkpoint: required for lyapunov = net");
        Section acc = root.sub("accuracy");
        eps = acc.num("eps", 0.05);
        threshold = acc.num("threshold", 0.99);
        if (acc.has("delta_bar")) delta_bar = acc.num("delta_bar");
        if (acc.has("C_bar")) C_bar = acc.num("C_bar");
        if (acc.has("lambda")) lambda = acc.num("lambda");
        acc.finish();
    }
    root.finish();
    if (grid.box.dim() != sys.dim()) throw ConfigError("domain: dimension does not match the model");
    ctx.start();

    if (lyap == "model") {
        const CertSetup s = build_cert(*cs, sys, grid.box);
        const PerturbationSampler sampler(sys.dim(), s.cert.lambda, n_psi, n_eta, ctx.seed);
        const StrongCheckReport r = check_strong_condition(s.V, sys.drift, grid, s.cert, sampler);
        ordered_json j = ordered_json::parse(check_report_json(r, grid, s.cert, sampler));
        if (s.D) j["D"] = *s.D;
        ctx.write("verify_report.json", j.dump(2) + "\n");
        *ctx.log << (r.pass() ? "pass" : "FAIL") << ": " << r.failures << " failures of " << r.points
                 << ", worst margin " << r.worst_margin << " at (" << (r.worst_point.empty() ? 0.0 : r.worst_point[0])
                 << ", " << (r.worst_point.size() > 1 ? r.worst_point[1] : 0.0) << ")\n";
        return r.pass() ? kPass : kVerifyFail;
    }
    std::ifstream in(checkpoint);
    if (!in) throw ParameterError("cannot read checkpoint " + checkpoint);
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const NetParams net = net_from_json(text);
    const json tc = json::parse(text).value("train_config", json::object());
    TrainConfig cfg;
    cfg.delta_bar = delta_bar.value_or(tc.value("delta_bar", cfg.delta_bar));
    cfg.C_bar = C_bar.value_or(tc.value("C_bar", cfg.C_bar));
    cfg.lambda = lambda.value_or(tc.value("lambda", cfg.lambda));
    cfg.validate();
    const PerturbationSampler sampler(sys.dim(), cfg.lambda, n_psi, n_eta, ctx.seed);
    const AccuracyReport r = verify_accuracy(net, sys.drift, grid, cfg, eps, sampler);
    ordered_json j = ordered_json::parse(accuracy_json(r, grid, cfg, eps));
    j["threshold"] = threshold;
    j["pass"] = r.pass(threshold);
    ctx.write("verify_report.json", j.dump(2) + "\n");
    *ctx.log << (r.pass(threshold) ? "pass" : "FAIL") << ": pass rate " << r.pass_rate << ", worst margin "
             << r.worst_margin << "\n";
    return r.pass(threshold) ? kPass : kVerifyFail;
}

AttractorConfig parse_attractor(Section s, std::uint64_t seed)
{
    AttractorConfig a;
    a.noise.hurst = s.num("hurst", 0.4);
    a.noise.dt = s.num("dt", 1.0 / 256.0);
    a.noise.method = parse_method(s.str("method", "auto"));
    a.horizons = s.nums("horizons", std::vector<double>{10.0, 20.0});
    a.init_resolution = s.count("init_resolution", 32);
    a.center = s.nums("center", std::vector<double>{});
    a.radius_cap = s.num("radius_cap", 4.0);
    a.absorbing_terms = s.count("absorbing_terms", 4);
    a.C_p = s.num("C_p", 4.0);
    a.seed = seed;
    s.finish();
    a.validate();
    return a;
}

OracleConfig parse_oracle(Section s, std::size_t dim)
{
    OracleConfig o;
    if (s.has("starts")) {
        Section b = s.sub("starts");
        o.starts = parse_box(b);
        b.finish();
    } else {
        s.sub("starts");
        o.starts = Box::cube(dim, 3.0);
    }
    o.res = s.count("res", o.res);
    o.T = s.num("T", o.T);
    o.clip = s.num("clip", o.T / 2.0);
    o.dt = s.num("dt", o.dt);
    o.record_stride = s.count("record_stride", o.record_stride);
    o.fill_angles = s.count("fill_angles", o.fill_angles);
    o.fill_radius = s.num("fill_radius", o.fill_radius);
    o.fill_T = s.num("fill_T", o.fill_T);
    o.voxel = s.num("voxel", o.voxel);
    s.finish();
    return o;
}

void write_table(const Context& ctx, const std::string& name, const ExperimentTable& t, bool logx)
{
    write_table_csv(ctx.path(name + ".csv"), t);
    ctx.write(name + ".json", t.provenance + "\n");
    ctx.plot_table(name + ".csv", name, "1:2:3", "yerrorlines", logx);
    for (const auto& r : t.rows)
        *ctx.log << t.parameter << " = " << r.parameter << ": " << t.value << " " << r.mean << " +- " << r.std_err
                 << " (flagged " << r.n_flagged << ")\n";
}

int cmd_attractor(Section& root, Context& ctx)
{
    const ModelSpec ms = parse_model(root.sub("model"));
    const SystemSpec sys = ms.build();
    const std::string exp = root.str("experiment", "pullback");
    const std::size_t n_seeds = root.count("n_seeds", 10);
    const bool use_cert = root.flag("use_certificate", false);
    std::optional<CertSpec> cs;
    if (use_cert) cs = parse_cert(root.sub("cert"), ms.name);

    if (exp == "local-stability") {
        LocalStabilityConfig lc;
        Section l = root.sub("local");
        lc.noise.hurst = l.num("hurst", 0.4);
        lc.noise.dt = l.num("dt", 1.0 / 256.0);
        lc.noise.t_fwd = l.num("T", 40.0);
        lc.noise.method = parse_method(l.str("method", "auto"));
        lc.y0_radii = l.nums("y0_radii", lc.y0_radii);
        lc.directions = l.count("directions", lc.directions);
        lc.domain_radius = l.num("domain_radius", lc.domain_radius);
        l.finish();
        lc.C_g_list = root.nums("C_g_list");
        lc.diffusion = root.str("diffusion", "vanishing-at-zero");
        lc.n_seeds = n_seeds;
        lc.master_seed = ctx.seed;
        root.finish();
        lc.noise.grid();
        ctx.start();
        write_table(ctx, "local_stability", local_stability_experiment(sys, lc), false);
        return kPass;
    }

    AttractorConfig ac = parse_attractor(root.sub("attractor"), ctx.seed);
    const bool with_oracle = root.has("oracle") || exp == "semicontinuity";
    OracleConfig oc;
    if (with_oracle) oc = parse_oracle(root.sub("oracle"), sys.dim());
    std::optional<double> tol;
    if (root.has("tolerance")) tol = root.num("tolerance");
    std::vector<double> C_g_list, steps;
    std::vector<int> levels;
    std::string kind = "linear-bump";
    if (exp == "semicontinuity") {
        C_g_list = root.nums("C_g_list");
        kind = root.str("diffusion", kind);
    } else if (exp == "stepsize") {
        steps = root.nums("steps");
    } else if (exp == "dyadic") {
        levels = root.ints("levels");
    } else if (exp != "pullback") {
        throw ConfigError("experiment: unknown '" + exp + "'");
    }
    root.finish();
    ctx.start();

    std::optional<CertSetup> setup;
    BallSource ball;
    if (cs) {
        setup = build_cert(*cs, sys, Box::cube(sys.dim(), 3.0));
        ball.V = &setup->V;
        ball.cert = setup->cert;
    }
    std::optional<DeterministicAttractor> A0;
    if (with_oracle) {
        A0 = deterministic_attractor(sys.drift, oc);
        write_cloud_csv(ctx.path("oracle_cloud.csv"), A0->cloud);
    }
    if (exp == "pullback") {
        const AttractorEstimate e = pullback_attractor(sys, ball, ac);
        write_cloud_csv(ctx.path("cloud.csv"), e.cloud);
        ordered_json j = ordered_json::parse(estimate_json(e));
        int rc = kPass;
        if (A0) {
            const double dH = hausdorff_semi(e.cloud, A0->cloud);
            j["dH_oracle"] = dH;
            *ctx.log << "d_H(estimate | oracle) = " << dH << "\n";
            if (tol && dH > *tol) rc = kVerifyFail;
        }
        ctx.write("estimate.json", j.dump(2) + "\n");
        if (ctx.plot) ctx.write("cloud.gp", "set datafile separator ','\nset key autotitle columnhead\n"
                                            "plot 'oracle_cloud.csv' using 1:2 with dots, 'cloud.csv' using 1:2 with points pt 7 ps 0.3\n");
        return rc;
    }
    if (exp == "semicontinuity") {
        SemicontinuityConfig sc;
        sc.attractor = ac;
        sc.C_g_list = C_g_list;
        sc.diffusion = kind;
        sc.n_seeds = n_seeds;
        sc.master_seed = ctx.seed;
        write_table(ctx, "semicontinuity", semicontinuity_experiment(sys, ball, sc, A0->cloud), true);
        return kPass;
    }
    if (exp == "stepsize") {
        StepsizeConfig sc;
        sc.attractor = ac;
        sc.steps = steps;
        sc.n_seeds = n_seeds;
        sc.master_seed = ctx.seed;
        write_table(ctx, "stepsize", stepsize_experiment(sys, sc), true);
        return kPass;
    }
    DyadicConfig dc;
    dc.attractor = ac;
    dc.levels = levels;
    dc.n_seeds = n_seeds;
    dc.master_seed = ctx.seed;
    write_table(ctx, "dyadic", dyadic_experiment(sys, dc), false);
    return kPass;
}

int cmd_train_net(Section& root, Context& ctx)
{
    const ModelSpec ms = parse_model(root.sub("model"));
    const SystemSpec sys = ms.build();
    Section dom = root.sub("domain");
    SamplePlan plan;
    plan.domain = parse_box(dom);
    dom.finish();
    Section pl = root.sub("plan");
    plan.eps0 = pl.num("eps0", 0.2);
    plan.rho = pl.num("rho", 0.05);
    plan.m_z = pl.count("m_z", 0);
    plan.m_psi = pl.count("m_psi", 8);
    plan.m_eta = pl.count("m_eta", 8);
    pl.finish();
    plan.seed = derive_seed(ctx.seed, 0);
    Section ns = root.sub("net");
    const std::size_t h = ns.count("h", 64);
    const int s = static_cast<int>(ns.count("s", 2));
    const double alpha_bar = ns.num("alpha_bar", 0.5);
    const std::string init = ns.str("init", "random");
    ns.finish();
    Section ts = root.sub("train");
    TrainConfig tc;
    tc.delta_bar = ts.num("delta_bar", tc.delta_bar);
    tc.C_bar = ts.num("C_bar", tc.C_bar);
    tc.lambda = ts.num("lambda", tc.lambda);
    tc.learning_rate = ts.num("learning_rate", tc.learning_rate);
    tc.max_iterations = ts.count("max_iterations", tc.max_iterations);
    tc.tolerance = ts.num("tolerance", tc.tolerance);
    tc.min_learning_rate = ts.num("min_learning_rate", tc.min_learning_rate);
    tc.patience = ts.count("patience", tc.patience);
    ts.finish();
    Section vs = root.sub("verify");
    const std::size_t vres = vs.count("res", 200);
    const double eps = vs.num("eps", plan.eps0 / 4.0);
    const double threshold = vs.num("threshold", 0.99);
    const std::size_t v_psi = vs.count("n_psi", 16), v_eta = vs.count("n_eta", 16);
    vs.finish();
    root.finish();
    plan.validate();
    tc.validate();
    if (plan.domain.dim() != sys.dim()) throw ConfigError("domain: dimension does not match the model");
    if (init != "random" && init != "zero-output") throw ConfigError("net.init: expected random or zero-output");
    ctx.start();

    NetParams net = init_net(sys.dim(), h, alpha_bar, derive_seed(ctx.seed, 1), s);
    if (init == "zero-output") {
        std::fill(net.W2.begin(), net.W2.end(), 0.0);
        net.b2 = 0.0;
    }
    const RiskData data = build_risk_data(sys.drift, plan, tc.lambda);
    const TrainResult tr = train(net, data, tc);
    ctx.write("checkpoint.json", checkpoint_json(tr.theta, tc, tr) + "\n");
    std::string csv = "iteration,loss\n";
    for (std::size_t k = 0; k < tr.loss_history.size(); ++k)
        csv += std::to_string(k) + "," + fmt(tr.loss_history[k]) + "\n";
    ctx.write("loss_history.csv", csv);
    ctx.plot_table("loss_history.csv", "empirical risk", "1:2", "lines", false, true);
    if (tr.aborted) {
        *ctx.log << "training aborted: " << tr.diagnostics << "\n";
        return kComputeFail;
    }
    const BoxGrid grid{plan.domain, vres};
    const PerturbationSampler sampler(sys.dim(), tc.lambda, v_psi, v_eta, derive_seed(ctx.seed, 2));
    const AccuracyReport r = verify_accuracy(tr.theta, sys.drift, grid, tc, eps, sampler);
    ordered_json j = ordered_json::parse(accuracy_json(r, grid, tc, eps));
    j["samples"] = data.size();
    j["final_loss"] = tr.loss_history.back();
    j["iterations"] = tr.iterations;
    j["converged"] = tr.converged;
    j["threshold"] = threshold;
    j["pass"] = tr.converged && r.pass(threshold);
    ctx.write("train_report.json", j.dump(2) + "\n");
    *ctx.log << "final loss " << tr.loss_history.back() << " after " << tr.iterations << " iterations, pass rate "
             << r.pass_rate << "\n";
    return tr.converged && r.pass(threshold) ? kPass : kVerifyFail;
}

} // namespace

int execute(const std::string& command, const json& resolved, bool plot_script, std::ostream& log)
{
    Context ctx;
    ctx.resolved = resolved;
    ctx.plot = plot_script;
    ctx.log = &log;
    try {
        Section root(resolved, "");
        root.str("command");
        ctx.seed = root.u64("seed", 0);
        const std::uint64_t threads = root.u64("threads", 0);
        ctx.dir = root.str("out", "out");
        if (threads > 0) set_threads(static_cast<int>(threads));
        if (command == "fbm") return cmd_fbm(root, ctx);
        if (command == "lift") return cmd_lift(root, ctx);
        if (command == "norms") return cmd_norms(root, ctx);
        if (command == "greedy") return cmd_greedy(root, ctx);
        if (command == "simulate") return cmd_simulate(root, ctx);
        if (command == "verify") return cmd_verify(root, ctx);
        if (command == "attractor") return cmd_attractor(root, ctx);
        if (command == "train-net") return cmd_train_net(root, ctx);
        throw ConfigError("unknown command " + command);
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const ParameterError& e) {
        log << "parameter error: " << e.what() << "\n";
        return kConfigError;
    } catch (const json::exception& e) {
        log << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        log << "computation failed: " << e.what() << "\n";
        return kComputeFail;
    }
}

} // namespace roughlyap::cli
