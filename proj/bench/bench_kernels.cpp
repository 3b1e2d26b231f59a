// Serial reference vs OpenMP for the parallel kernels. Arg 0 = serial, 1 = parallel.

#include <benchmark/benchmark.h>

#include <random>

#include "roughlyap/attractor.hpp"
#include "roughlyap/lyapnet.hpp"
#include "roughlyap/lyapunov.hpp"
#include "roughlyap/models.hpp"
#include "roughlyap/solver.hpp"

using namespace roughlyap;

namespace {

Exec mode(const benchmark::State& st) { return st.range(0) == 0 ? Exec::Serial : Exec::Parallel; }

void label(benchmark::State& st) { st.SetLabel(st.range(0) == 0 ? "serial" : "openmp"); }

PointCloud uniform_cloud(std::size_t n, double half, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-half, half);
    PointCloud c;
    c.dim = 2;
    for (std::size_t k = 0; k < 2 * n; ++k) c.points.push_back(u(rng));
    return c;
}

void BM_Hausdorff(benchmark::State& st)
{
    const PointCloud A = uniform_cloud(4000, 2.0, 1), B = uniform_cloud(4000, 1.5, 2);
    for (auto _ : st) benchmark::DoNotOptimize(hausdorff_semi(A, B, mode(st)));
    label(st);
}

void BM_StrongCheck(benchmark::State& st)
{
    const SystemSpec sys = make_pendulum();
    const LyapunovFn V = pendulum_lyapunov(1.0, 0.5);
    const StrongCert cert{0.05, 2.0, 0.5, "manual"};
    const BoxGrid grid{Box::cube(2, 6.0), 100};
    const PerturbationSampler ps(2, cert.lambda, 16, 16, 3);
    for (auto _ : st) benchmark::DoNotOptimize(check_strong_condition(V, sys.drift, grid, cert, ps, mode(st)));
    label(st);
}

void BM_EvolveCloud(benchmark::State& st)
{
    const SystemSpec sys = attach_diffusion(make_fhn(), "linear-bump", 0.05);
    NoiseConfig nc;
    nc.dt = 1.0 / 256.0;
    nc.t_fwd = 5.0;
    const RoughPath noise = make_window_noise(nc, 2, 4);
    const PointCloud c = fill_ball({0.0, 0.0}, 4.0, 32);
    for (auto _ : st)
        benchmark::DoNotOptimize(evolve_cloud(sys, noise, c, 0, noise.grid().n_steps, mode(st)));
    label(st);
}

void BM_Ensemble(benchmark::State& st)
{
    const SystemSpec sys = attach_diffusion(make_fhn(), "linear-bump", 0.05);
    const LyapunovFn V = fhn_lyapunov(0.08, 0.8, 2.0, 3.0).V;
    EnsembleConfig c;
    c.noise.dt = 1e-3;
    c.noise.t_fwd = 1.0;
    c.y0_set = {{1.0, 0.0}};
    c.n_seeds = 16;
    c.record_stride = 10;
    for (auto _ : st) benchmark::DoNotOptimize(ensemble(sys, c, &V, mode(st)));
    label(st);
}

void BM_EmpiricalRisk(benchmark::State& st)
{
    const SystemSpec sys = make_linear_dissipative(1.0, {0.0, 0.0});
    SamplePlan plan;
    plan.domain = Box::cube(2, 2.0);
    plan.eps0 = 0.2;
    const RiskData data = build_risk_data(sys.drift, plan, 0.1);
    const NetParams net = init_net(2, 64, 0.5, 5);
    const TrainConfig cfg;
    for (auto _ : st) benchmark::DoNotOptimize(empirical_risk(net, data, cfg, true, mode(st)));
    label(st);
}

void BM_FbmScaling(benchmark::State& st)
{
    FbmConfig c;
    c.hurst = 0.4;
    c.grid = Grid{0.0, 1.0 / 1024.0, 1024};
    for (auto _ : st) benchmark::DoNotOptimize(fbm_variance_scaling(c, 500, mode(st)));
    label(st);
}

} // namespace

BENCHMARK(BM_Hausdorff)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_StrongCheck)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_EvolveCloud)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Ensemble)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_EmpiricalRisk)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_FbmScaling)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
