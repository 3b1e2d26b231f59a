#include "doctest.h"

#include "json.hpp"
#include "roughlyap/attractor.hpp"
#include "roughlyap/solver.hpp"
#include "support.hpp"

using namespace roughlyap;
using testsupport::Gen;

TEST_SUITE("solver") {

TEST_CASE("zero diffusion reproduces explicit Euler bitwise")
{
    Gen gen(71);
    const SystemSpec sys = make_fhn();
    const RoughPath noise = gen.fbm(0.4, 2, 500, 0.01);
    const std::vector<double> y0{1.0, -0.5};
    const Trajectory tr = rough_euler(sys, noise, y0, 0, 500);
    std::vector<double> y = y0, f(2);
    for (std::size_t k = 0; k <= 500; ++k) {
        CHECK(tr.state(k)[0] == y[0]);
        CHECK(tr.state(k)[1] == y[1]);
        sys.drift.f(y.data(), f.data());
        for (int a = 0; a < 2; ++a) y[a] = y[a] + f[a] * 0.01;
    }
}

TEST_CASE("additive noise telescopes")
{
    Gen gen(72);
    const SystemSpec sys = attach_diffusion(make_fhn(), "constant", 0.3);
    const RoughPath noise = gen.fbm(0.4, 2, 1000, 0.01);
    const Trajectory tr = rough_euler(sys, noise, {0.5, 0.5}, 0, 1000);
    std::vector<double> drift_sum(2, 0.0), f(2);
    double worst = 0.0;
    for (std::size_t k = 0; k < 1000; ++k) {
        sys.drift.f(tr.state(k), f.data());
        for (int a = 0; a < 2; ++a) drift_sum[a] += f[a] * 0.01;
        for (int a = 0; a < 2; ++a) {
            const double pred = tr.state(0)[a] + drift_sum[a] + 0.3 * (noise.path.node(k + 1)[a] - noise.path.node(0)[a]);
            worst = std::max(worst, std::abs(tr.state(k + 1)[a] - pred));
        }
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("one step carries the second-level correction")
{
    Gen gen(73);
    const SystemSpec sys = attach_diffusion(make_fhn(), "linear-bump", 0.4);
    const RoughPath noise = gen.fbm(0.4, 2, 4, 0.25);
    const double y0[2] = {0.3, -0.7};
    double f[2], G[4], D[8];
    sys.drift.f(y0, f);
    sys.diffusion.g(y0, G);
    sys.diffusion.Dg(y0, D);
    const double* x0 = noise.path.node(0);
    const double* x1 = noise.path.node(1);
    const double* XX = noise.step_level2(0);
    double expect[2];
    for (int i = 0; i < 2; ++i) {
        expect[i] = y0[i] + f[i] * 0.25;
        for (int j = 0; j < 2; ++j) expect[i] += G[i * 2 + j] * (x1[j] - x0[j]);
        for (int j = 0; j < 2; ++j)
            for (int l = 0; l < 2; ++l) {
                double dgg = 0.0;
                for (int k = 0; k < 2; ++k) dgg += D[(i * 2 + j) * 2 + k] * G[k * 2 + l];
                expect[i] += dgg * XX[l * 2 + j];
            }
    }
    const Trajectory tr = rough_euler(sys, noise, {y0[0], y0[1]}, 0, 1);
    CHECK(tr.state(1)[0] == doctest::Approx(expect[0]).epsilon(1e-15));
    CHECK(tr.state(1)[1] == doctest::Approx(expect[1]).epsilon(1e-15));
}

TEST_CASE("commutative scalar-like diffusion converges to the pathwise solution")
{
    // dy_i = c tanh-bump(y_i) dx_i has the same solution as the ODE driven by the
    // smooth path; refining a fixed piecewise-linear path must shrink the error.
    Gen gen(74);
    const SystemSpec sys = attach_diffusion(make_linear_dissipative(1e-9, {0.0, 0.0}), "linear-bump", 1.0);
    const RoughPath base = gen.fbm(0.4, 2, 16, 1.0 / 16.0);
    const RoughPath ref = refine_linear(base, 1024);
    const Trajectory exact = rough_euler(sys, ref, {0.2, -0.1}, 0, ref.grid().n_steps);
    double prev = 1e300;
    for (std::size_t f : {4, 16, 64}) {
        const RoughPath r = refine_linear(base, f);
        const Trajectory tr = rough_euler(sys, r, {0.2, -0.1}, 0, r.grid().n_steps);
        const double err = std::hypot(tr.states[tr.states.size() - 2] - exact.states[exact.states.size() - 2],
                                      tr.states.back() - exact.states.back());
        CHECK(err < prev);
        prev = err;
    }
}

TEST_CASE("blow-up truncates the trajectory")
{
    const SystemSpec sys = make_fhn();
    const RoughPath noise = zero_noise(Grid{0.0, 0.5, 100}, 2);
    const Trajectory tr = rough_euler(sys, noise, {1e4, 0.0}, 0, 100);
    REQUIRE(tr.blowup_step);
    CHECK(tr.size() == *tr.blowup_step);
    std::vector<double> y{1e4, 0.0};
    CHECK_FALSE(rough_euler_final(sys, noise, y.data(), 0, 100));
}

TEST_CASE("rk4 is fourth order on a linear system")
{
    const SystemSpec sys = make_pendulum(1.0, 0.5);
    DriftField lin = sys.drift;
    lin.f = [](const double* y, double* o) {
        o[0] = y[1];
        o[1] = -y[0] - y[1];
    };
    // exact solution of y'' + y' + y = 0 with y(0) = 1, y'(0) = 0
    const double w = std::sqrt(0.75), T = 3.0;
    const double exact = std::exp(-0.5 * T) * (std::cos(w * T) + 0.5 / w * std::sin(w * T));
    double e1 = 0.0, e2 = 0.0;
    for (double dt : {0.1, 0.05}) {
        std::vector<double> y{1.0, 0.0};
        CHECK(ode_final(lin, y.data(), T, dt));
        (dt == 0.1 ? e1 : e2) = std::abs(y[0] - exact);
    }
    CHECK(e1 / e2 == doctest::Approx(16.0).epsilon(0.1));
    const Trajectory tr = ode_solve(lin, {1.0, 0.0}, 0.0, T, 0.05);
    CHECK(tr.size() == 61);
    CHECK(std::abs(tr.states[120] - exact) == doctest::Approx(e2));
}

TEST_CASE("window noise covers the configured interval")
{
    NoiseConfig c;
    c.dt = 0.125;
    c.t_back = 2.0;
    c.t_fwd = 1.0;
    const RoughPath n = make_window_noise(c, 2, 9);
    CHECK(n.grid().t0 == -2.0);
    CHECK(n.grid().n_steps == 24);
    c.t_fwd = 1.1;
    CHECK_THROWS_AS(c.grid(), ParameterError);
}

TEST_CASE("decay bound holds for a certified system and fails for a wrong certificate")
{
    const SystemSpec sys = attach_diffusion(make_pendulum(1.0, 0.5), "linear-bump", 0.05);
    const LyapunovFn V = pendulum_lyapunov(1.0, 0.5);
    const double K = pendulum_K(1.0, 0.5);
    auto derive = [&](double l) {
        return derive_cert_lipschitz2(V.classical->d1, V.classical->d2, V.L_V, *sys.drift.lipschitz, K, 0.0, l);
    };
    const StrongCert cert = derive(0.5 * max_feasible_lambda(derive)).cert;
    NoiseConfig nc;
    nc.dt = 1e-3;
    nc.t_fwd = 5.0;
    const NormParams np = nc.norm_params();
    Gen gen(75);
    for (int r = 0; r < 5; ++r) {
        const RoughPath noise = make_window_noise(nc, 2, gen.u64());
        const Trajectory tr = rough_euler(sys, noise, {3.0, 2.0}, 0, noise.grid().n_steps);
        const DecayReport rep = verify_decay_bound(tr, V, cert, noise, 0, V.L_V, 4.0, 0.05, np);
        CHECK(rep.violations == 0);
        CHECK(rep.checked == tr.size());
    }
    // without noise the envelope is the certificate alone, and V >= 1 defeats C_lambda / delta << 1
    const SystemSpec quiet = make_pendulum(1.0, 0.5);
    const RoughPath noise = make_window_noise(nc, 2, 1);
    const Trajectory tr = rough_euler(quiet, noise, {3.0, 2.0}, 0, noise.grid().n_steps);
    const DecayReport bad =
        verify_decay_bound(tr, V, StrongCert{cert.lambda, 1e-3, 5.0, "manual"}, noise, 0, V.L_V, 4.0, 0.0, np);
    CHECK(bad.violations > 0);
    CHECK(bad.max_excess > 0.0);
}

TEST_CASE("ensemble is reproducible and thread independent")
{
    const SystemSpec sys = attach_diffusion(make_fhn(), "linear-bump", 0.05);
    const LyapunovFn V = fhn_lyapunov(0.08, 0.8, 2.0, 3.0).V;
    EnsembleConfig c;
    c.noise.dt = 0.01;
    c.noise.t_fwd = 2.0;
    c.y0_set = {{1.0, 0.0}, {-1.0, 1.0}};
    c.n_seeds = 6;
    c.master_seed = 4;
    c.record_stride = 10;
    const EnsembleResult a = ensemble(sys, c, &V, Exec::Serial);
    const EnsembleResult b = ensemble(sys, c, &V, Exec::Parallel);
    CHECK(a.runs == 12);
    CHECK(a.times.size() == 21);
    CHECK(a.p50 == b.p50);
    CHECK(a.final_V == b.final_V);
    CHECK(a.config_hash == b.config_hash);
    for (std::size_t k = 0; k < a.times.size(); ++k) {
        CHECK(a.p05[k] <= a.p50[k]);
        CHECK(a.p50[k] <= a.p95[k]);
    }
    c.master_seed = 5;
    CHECK(ensemble(sys, c, &V).config_hash != a.config_hash);
    const auto j = nlohmann::json::parse(ensemble_json(a));
    CHECK(j["V_quantiles"]["p50"].size() == 21);
    CHECK(j["flags"]["runs"] == 12);
}

}
