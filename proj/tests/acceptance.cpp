// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Criteria 6-8 and 10-15 run the builtin CLI profiles in-process and read their reports,
// so the numbers are the ones a user reproduces with `roughlyap <command> --profile <name>`.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "roughlyap/attractor.hpp"
#include "roughlyap/cli.hpp"
#include "roughlyap/greedy.hpp"
#include "roughlyap/lyapnet.hpp"
#include "roughlyap/models.hpp"
#include "roughlyap/solver.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace roughlyap;
using testsupport::Gen;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

const fs::path kOut = fs::current_path() / "acceptance_out";

std::string num(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

int run_profile(const std::string& command, const std::string& profile, const std::string& out)
{
    std::vector<std::string> args{"roughlyap", command, "--profile", profile, "--out", (kOut / out).string()};
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return cli::run(static_cast<int>(argv.size()), argv.data());
}

json read_json(const std::string& out, const std::string& file)
{
    std::ifstream in(kOut / out / file);
    return json::parse(in);
}

struct Row {
    double parameter, mean, std_err;
};

std::vector<Row> read_table(const std::string& out, const std::string& file)
{
    std::ifstream in(kOut / out / file);
    std::string line;
    std::getline(in, line);
    std::vector<Row> rows;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string a, b, c;
        std::getline(ss, a, ',');
        std::getline(ss, b, ',');
        std::getline(ss, c, ',');
        rows.push_back({std::stod(a), std::stod(b), std::stod(c)});
    }
    return rows;
}

std::string means(const std::vector<Row>& rows)
{
    std::string s;
    for (const auto& r : rows) s += (s.empty() ? "" : " ") + num(r.mean);
    return s;
}

bool strictly_decreasing(const std::vector<Row>& rows)
{
    for (std::size_t k = 1; k < rows.size(); ++k)
        if (!(rows[k].mean < rows[k - 1].mean)) return false;
    return !rows.empty();
}

RoughPath fbm_path(double hurst, std::size_t dims, std::uint64_t seed)
{
    FbmConfig c;
    c.hurst = hurst;
    c.dims = dims;
    c.grid = Grid{0.0, 1.0 / 1024.0, 1024};
    c.seed = seed;
    return make_noise(c);
}

Outcome check_chen()
{
    Gen gen(1001);
    double worst = 0.0;
    for (int path = 0; path < 100; ++path) {
        const RoughPath rp = fbm_path(0.4, 2, gen.u64());
        for (int k = 0; k < 1000; ++k) {
            std::size_t s = gen.index(0, 1024), u = gen.index(0, 1024), t = gen.index(0, 1024);
            if (s > u) std::swap(s, u);
            if (u > t) std::swap(u, t);
            if (s > u) std::swap(s, u);
            worst = std::max(worst, testsupport::chen_residual(rp, s, u, t));
        }
    }
    return {worst <= 1e-12, "max residual " + num(worst)};
}

Outcome check_pvar_oracle()
{
    Gen gen(1002);
    std::size_t mismatches = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = gen.index(1, 9);
        const PathSample p = gen.walk(n, 1);
        const double pp = gen.uniform(2.0, 3.0);
        if (p_variation_sum(p, 0, n, pp) != testsupport::enum_path_sum(p, 0, n, pp)) ++mismatches;
    }
    return {mismatches == 0, std::to_string(mismatches) + " mismatches of 500"};
}

Outcome check_fbm_scaling()
{
    bool ok = true;
    std::string detail;
    for (double H : {0.35, 0.40, 0.45}) {
        FbmConfig c;
        c.hurst = H;
        c.dims = 1;
        c.grid = Grid{0.0, 1.0 / 1024.0, 1024};
        c.seed = 1003;
        const double slope = loglog_slope(fbm_variance_scaling(c, 10000));
        ok = ok && std::abs(slope - 2.0 * H) <= 0.04;
        detail += (detail.empty() ? "" : ", ") + ("H=" + num(H) + " slope " + num(slope));
    }
    return {ok, detail};
}

Outcome check_dyadic_domination()
{
    const NormParams np = NormParams::for_hurst(0.4);
    const double factor = std::pow(3.0, 1.0 - 1.0 / np.p);
    Gen gen(1004);
    std::size_t violations = 0;
    double worst = 0.0;
    for (int draw = 0; draw < 100; ++draw) {
        const RoughPath x = fbm_path(0.4, 2, gen.u64());
        const double nx = p_var_norm(x, 0, 1024, np);
        for (int n = 2; n <= 8; ++n) {
            // compare on the source grid so partitions inside the linear pieces count
            const RoughPath d = refine_linear(dyadic_approx(x, n), std::size_t{1024} >> n);
            const double nd = p_var_norm(d, 0, d.grid().n_steps, np);
            worst = std::max(worst, nd / nx);
            if (nd > factor * nx) ++violations;
        }
    }
    return {violations == 0,
            std::to_string(violations) + " violations, max ratio " + num(worst) + " vs " + num(factor)};
}

Outcome check_greedy_bound()
{
    GreedyConfig cfg;
    cfg.lambda = 0.5;
    cfg.C_p = 4.0;
    cfg.C_g = 0.05;
    cfg.params = NormParams::for_hurst(0.4);
    Gen gen(1005);
    std::size_t violations = 0, max_count = 0;
    for (int draw = 0; draw < 100; ++draw) {
        const RoughPath x = fbm_path(0.4, 2, gen.u64());
        const GreedyPartition part = greedy_times(x, 0, 1024, cfg);
        const CountBound b = count_bound_report(part, x, 0, 1024, cfg);
        max_count = std::max(max_count, b.N);
        if (!b.ok) ++violations;
    }
    return {violations == 0, std::to_string(violations) + " violations, max N " + std::to_string(max_count)};
}

Outcome check_fhn_certificate()
{
    const int rc = run_profile("verify", "fhn", "fhn_verify");
    const json r = read_json("fhn_verify", "verify_report.json");
    const double lambda = r["cert"]["lambda"], D = r["D"], margin = r["worst_margin"];
    const bool ok = rc == 0 && margin >= 0.0 && std::abs(12.0 * D * lambda - 1.0) < 1e-12;
    return {ok, "worst margin " + num(margin) + ", D " + num(D) + ", lambda " + num(lambda)};
}

Outcome check_pendulum_certificate()
{
    const int rc = run_profile("verify", "pendulum-derived", "pendulum_verify");
    const json r = read_json("pendulum_verify", "verify_report.json");
    const std::size_t failures = r["failures"];
    return {rc == 0 && failures == 0, std::to_string(failures) + " failures, worst margin " +
                                          num(r["worst_margin"].get<double>()) + ", lambda " +
                                          num(r["cert"]["lambda"].get<double>())};
}

Outcome check_decay_envelope()
{
    const int rc = run_profile("simulate", "fhn-ensemble", "fhn_ensemble");
    const json r = read_json("fhn_ensemble", "ensemble.json");
    const std::size_t violations = r["violations"], runs = r["flags"]["runs"];
    return {rc == 0 && violations == 0 && runs == 100,
            std::to_string(violations) + " violations over " + std::to_string(runs) + " runs"};
}

Outcome check_euler_degeneracy()
{
    Gen gen(1009);
    std::size_t mismatches = 0;
    double worst = 0.0;
    for (const SystemSpec& base : {make_fhn(), make_pendulum(1.0, 0.5)}) {
        for (int r = 0; r < 10; ++r) {
            const RoughPath noise = gen.fbm(0.4, 2, 1000, 0.01);
            const std::vector<double> y0{gen.uniform(-2.0, 2.0), gen.uniform(-2.0, 2.0)};
            const Trajectory tr = rough_euler(base, noise, y0, 0, 1000);
            std::vector<double> y = y0, f(2);
            for (std::size_t k = 0; k <= 1000; ++k) {
                if (tr.state(k)[0] != y[0] || tr.state(k)[1] != y[1]) ++mismatches;
                base.drift.f(y.data(), f.data());
                for (int a = 0; a < 2; ++a) y[a] = y[a] + f[a] * 0.01;
            }
            const double c = gen.uniform(0.05, 0.5);
            const SystemSpec add = attach_diffusion(base, "constant", c);
            const Trajectory ta = rough_euler(add, noise, y0, 0, 1000);
            std::vector<double> drift(2, 0.0);
            for (std::size_t k = 0; k < 1000; ++k) {
                add.drift.f(ta.state(k), f.data());
                for (int a = 0; a < 2; ++a) {
                    drift[a] += f[a] * 0.01;
                    const double pred = y0[a] + drift[a] + c * (noise.path.node(k + 1)[a] - noise.path.node(0)[a]);
                    worst = std::max(worst, std::abs(ta.state(k + 1)[a] - pred));
                }
            }
        }
    }
    return {mismatches == 0 && worst <= 1e-12,
            std::to_string(mismatches) + " Euler mismatches, telescoping residual " + num(worst)};
}

Outcome check_pullback_deterministic()
{
    const int rc = run_profile("attractor", "fhn-deterministic", "pullback");
    const double dH = read_json("pullback", "estimate.json")["dH_oracle"];
    return {rc == 0 && dH <= 0.05, "d_H " + num(dH)};
}

Outcome check_semicontinuity()
{
    const int rc = run_profile("attractor", "semicontinuity", "semicontinuity");
    const auto rows = read_table("semicontinuity", "semicontinuity.csv");
    bool ok = rc == 0 && rows.size() == 4 && rows.back().mean < rows.front().mean;
    for (std::size_t k = 1; ok && k < rows.size(); ++k)
        ok = rows[k].mean <= rows[k - 1].mean + std::hypot(rows[k].std_err, rows[k - 1].std_err);
    return {ok, "means " + means(rows)};
}

Outcome check_stepsize()
{
    const int rc = run_profile("attractor", "stepsize", "stepsize");
    const auto rows = read_table("stepsize", "stepsize.csv");
    return {rc == 0 && rows.size() == 3 && strictly_decreasing(rows), "means " + means(rows)};
}

Outcome check_dyadic_attractor()
{
    const int rc = run_profile("attractor", "dyadic", "dyadic");
    const auto rows = read_table("dyadic", "dyadic.csv");
    return {rc == 0 && rows.size() == 3 && strictly_decreasing(rows), "means " + means(rows)};
}

Outcome check_local_stability()
{
    // deterministic rate: largest real part of the eigenvalues of Df(0), by central differences
    const SystemSpec sys = make_pendulum(1.0, 0.5);
    Eigen::Matrix2d J;
    const double h = 1e-6;
    for (int c = 0; c < 2; ++c) {
        double yp[2] = {0.0, 0.0}, ym[2] = {0.0, 0.0}, fp[2], fm[2];
        yp[c] = h;
        ym[c] = -h;
        sys.drift.f(yp, fp);
        sys.drift.f(ym, fm);
        for (int r = 0; r < 2; ++r) J(r, c) = (fp[r] - fm[r]) / (2.0 * h);
    }
    const double rate = J.eigenvalues().real().maxCoeff();
    const int rc = run_profile("attractor", "local-stability", "local_stability");
    const auto rows = read_table("local_stability", "local_stability.csv");
    bool ok = rc == 0 && rows.size() == 3;
    if (ok) {
        ok = rows[0].mean < 0.0 && rows[1].mean < 0.0 && rows[2].parameter == 0.0 &&
             std::abs(rows[2].mean - rate) <= 0.1 * std::abs(rate);
    }
    return {ok, "slopes " + means(rows) + ", deterministic rate " + num(rate)};
}

Outcome check_lyapunov_net()
{
    const int rc = run_profile("train-net", "linear", "train_net");
    const json r = read_json("train_net", "train_report.json");
    const double loss = r["final_loss"], rate = r["pass_rate"];
    const std::size_t iters = r["iterations"];

    // gradient check at the profile's initial point, where the risk is positive
    const json prof = cli::builtin_profile("train-net", "linear");
    const SystemSpec sys = make_linear_dissipative(1.0, {0.0, 0.0});
    SamplePlan plan;
    plan.domain = Box::cube(2, 2.0);
    plan.eps0 = prof["plan"]["eps0"];
    plan.rho = prof["plan"]["rho"];
    plan.m_psi = prof["plan"]["m_psi"];
    plan.m_eta = prof["plan"]["m_eta"];
    plan.seed = derive_seed(0, 0);
    TrainConfig tc;
    tc.delta_bar = prof["train"]["delta_bar"];
    tc.C_bar = prof["train"]["C_bar"];
    tc.lambda = prof["train"]["lambda"];
    const RiskData data = build_risk_data(sys.drift, plan, tc.lambda);
    const NetParams net = init_net(2, prof["net"]["h"], prof["net"]["alpha_bar"], derive_seed(0, 1));
    const RiskResult risk = empirical_risk(net, data, tc, true);
    const auto fd = testsupport::fd_gradient(
        [&](const std::vector<double>& th) {
            NetParams m = net;
            m.assign(th);
            return empirical_risk(m, data, tc, false).loss;
        },
        net.flatten(), 1e-6);
    const double gerr = testsupport::rel_error(risk.grad, fd);

    const bool ok = rc == 0 && loss <= 1e-6 && iters <= 5000 && rate >= 0.99 && risk.loss > 0.0 && gerr <= 1e-4;
    return {ok, "risk " + num(loss) + " after " + std::to_string(iters) + " iterations, pass rate " + num(rate) +
                    ", gradient rel. error " + num(gerr)};
}

Outcome check_covering()
{
    const Box unit{{0.0, 0.0}, {1.0, 1.0}};
    const double eps0 = 0.1, rho = 0.05;
    const std::size_t m = sample_size(unit, eps0, rho, corner_ball_fraction(unit, eps0));
    const std::vector<double> centers = covering_centers(unit, eps0);
    const SystemSpec sys = make_linear_dissipative(1.0, {0.0, 0.0});
    std::size_t successes = 0;
    for (std::uint64_t trial = 0; trial < 200; ++trial) {
        SamplePlan plan;
        plan.domain = unit;
        plan.eps0 = eps0;
        plan.rho = rho;
        plan.m_psi = 1;
        plan.m_eta = 1;
        plan.seed = derive_seed(1016, trial);
        const RiskData data = build_risk_data(sys.drift, plan, 0.0);
        bool all = data.size() == m;
        for (std::size_t c = 0; all && c < centers.size(); c += 2) {
            bool hit = false;
            for (std::size_t i = 0; !hit && i < data.size(); ++i)
                hit = std::hypot(data.z[2 * i] - centers[c], data.z[2 * i + 1] - centers[c + 1]) <= eps0;
            all = hit;
        }
        if (all) ++successes;
    }
    return {successes >= 190, std::to_string(successes) + " of 200 trials covered, M " + std::to_string(m)};
}

struct Criterion {
    const char* name;
    double limit_s;  // 0 when no runtime limit applies
    std::function<Outcome()> fn;
};

} // namespace

int main()
{
    fs::create_directories(kOut);
    const std::vector<Criterion> criteria{
        {"chen relation", 10, check_chen},
        {"p-variation oracle", 10, check_pvar_oracle},
        {"fbm moment scaling", 60, check_fbm_scaling},
        {"dyadic domination", 0, check_dyadic_domination},
        {"greedy count bound", 0, check_greedy_bound},
        {"fhn strong condition", 300, check_fhn_certificate},
        {"pendulum derived certificate", 0, check_pendulum_certificate},
        {"decay envelope ensemble", 300, check_decay_envelope},
        {"rough euler degeneracy", 0, check_euler_degeneracy},
        {"deterministic pullback", 0, check_pullback_deterministic},
        {"semicontinuity in C_g", 900, check_semicontinuity},
        {"step-size convergence", 0, check_stepsize},
        {"dyadic attractor convergence", 0, check_dyadic_attractor},
        {"local stability", 0, check_local_stability},
        {"lyapunov net training", 600, check_lyapunov_net},
        {"covering sample size", 0, check_covering},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[k].fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (criteria[k].limit_s > 0 && secs >= criteria[k].limit_s) {
            o.pass = false;
            o.detail += ", over the " + num(criteria[k].limit_s) + " s limit";
        }
        if (!o.pass) ++failed;
        std::printf("[#%zu] %s %s (%s, %.1f s)\n", k + 1, o.pass ? "PASS" : "FAIL", criteria[k].name,
                    o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
    return failed == 0 ? 0 : 1;
}
