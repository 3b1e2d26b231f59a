#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "roughlyap/lyapunov.hpp"
#include "roughlyap/models.hpp"
#include "roughlyap/rough_core.hpp"

namespace roughlyap {

struct Trajectory {
    Grid grid;              // covers the integrated interval
    std::size_t dim = 0;
    std::vector<double> states;  // stored states, node-major; shorter than grid after blow-up
    std::optional<std::size_t> blowup_step;
    std::string system;

    std::size_t size() const { return dim ? states.size() / dim : 0; }
    const double* state(std::size_t k) const { return states.data() + k * dim; }
};

/// States with a non-finite entry or norm above this are treated as blow-up.
inline constexpr double kBlowupNorm = 1e10;

/// y_{k+1} = y_k + f(y_k) dt + g(y_k) x_{k,k+1} + (Dg g)(y_k) XX_{k,k+1} over noise nodes i..j.
Trajectory rough_euler(const SystemSpec& sys, const RoughPath& noise, const std::vector<double>& y0, std::size_t i,
                       std::size_t j);
/// Same recursion keeping only the running state; false on blow-up (y then holds the last good state).
bool rough_euler_final(const SystemSpec& sys, const RoughPath& noise, double* y, std::size_t i, std::size_t j);

/// Classical fixed-step RK4 on [t0, t0 + T].
Trajectory ode_solve(const DriftField& drift, const std::vector<double>& y0, double t0, double T, double dt);
/// RK4 keeping only the running state; false on blow-up.
bool ode_final(const DriftField& drift, double* y, double T, double dt);

struct NoiseConfig {
    double hurst = 0.4;
    double dt = 1e-3;
    double t_back = 0.0;  // window starts at -t_back
    double t_fwd = 1.0;   // window ends at t_fwd
    FbmMethod method = FbmMethod::Auto;
    std::optional<NormParams> params;  // default NormParams::for_hurst(hurst)

    Grid grid() const;
    NormParams norm_params() const { return params ? *params : NormParams::for_hurst(hurst); }
};

RoughPath make_window_noise(const NoiseConfig& cfg, std::size_t dims, std::uint64_t seed);

struct DecayReport {
    std::size_t checked = 0;
    std::size_t violations = 0;
    std::size_t exact_evaluations = 0;
    double max_excess = -std::numeric_limits<double>::infinity();  // max of V(y_t) - envelope
};

/// Checks V(y_t) <= envelope(V(y_0), t, norm of the noise on [t_0, t]) at every stored node.
/// `noise` must be the path the trajectory was driven by, with trajectory node k at noise
/// node first + k. The norm is first screened with a coarse-stride lower bound (the envelope
/// is increasing in the norm); exact prefix norms are computed only when screening fails.
DecayReport verify_decay_bound(const Trajectory& traj, const LyapunovFn& V, const StrongCert& cert,
                               const RoughPath& noise, std::size_t first, double L_V, double C_p, double C_g,
                               const NormParams& np, std::size_t screen_stride = 16);

struct EnsembleConfig {
    NoiseConfig noise;                       // forward window [0, t_fwd] is integrated
    std::vector<std::vector<double>> y0_set;
    std::size_t n_seeds = 1;
    std::uint64_t master_seed = 0;
    std::size_t record_stride = 1;
    // decay check, active when a certificate is supplied
    std::optional<StrongCert> cert;
    double C_p = 4.0;
    std::size_t screen_stride = 16;
};

struct EnsembleResult {
    std::vector<double> times;
    std::vector<double> p05, p50, p95;  // quantiles of V(y_t) over runs
    std::vector<double> final_V;        // per run, NaN after blow-up
    std::vector<std::uint64_t> seeds;
    std::size_t runs = 0;
    std::size_t blowups = 0;
    std::size_t violations = 0;
    std::size_t exact_evaluations = 0;
    double max_excess = -std::numeric_limits<double>::infinity();
    std::string config_hash;
};

/// One rough_euler run per (seed, y0); seed s uses derive_seed(master_seed, s).
EnsembleResult ensemble(const SystemSpec& sys, const EnsembleConfig& cfg, const LyapunovFn* V,
                        Exec exec = Exec::Parallel);

void write_trajectory_csv(const std::string& file, const Trajectory& traj);
std::string ensemble_json(const EnsembleResult& r);

} // namespace roughlyap
