#pragma once

#include <optional>
#include <string>
#include <vector>

#include "roughlyap/lyapunov.hpp"
#include "roughlyap/models.hpp"
#include "roughlyap/rough_core.hpp"
#include "roughlyap/solver.hpp"

namespace roughlyap {

struct PointCloud {
    std::size_t dim = 0;
    std::vector<double> points;  // point-major
    std::string label;

    std::size_t size() const { return dim ? points.size() / dim : 0; }
    bool empty() const { return size() == 0; }
    const double* point(std::size_t i) const { return points.data() + i * dim; }
    void push(const double* p) { points.insert(points.end(), p, p + dim); }
    void validate() const;
};

/// max over a in A of min over b in B of |a - b|.
double hausdorff_semi(const PointCloud& A, const PointCloud& B, Exec exec = Exec::Parallel);

/// Keeps the first point in each cube of side `voxel`.
PointCloud voxel_dedup(const PointCloud& c, double voxel);

/// Uniform grid over the bounding box of the ball, exterior points rejected.
PointCloud fill_ball(const std::vector<double>& center, double radius, std::size_t res);

struct EvolveResult {
    PointCloud cloud;
    std::size_t dropped = 0;  // blow-up points removed
};

/// Rough Euler image of every point over noise nodes i..j (order preserved).
EvolveResult evolve_cloud(const SystemSpec& sys, const RoughPath& noise, const PointCloud& cloud, std::size_t i,
                          std::size_t j, Exec exec = Exec::Parallel);

/// Noise path with zero increments on `grid`.
RoughPath zero_noise(const Grid& grid, std::size_t dims);

struct AttractorConfig {
    NoiseConfig noise;             // hurst, dt and method; the window is set from the horizons
    std::vector<double> horizons;  // increasing pullback times, multiples of dt
    std::size_t init_resolution = 32;
    std::vector<double> center;    // ball center, origin when empty
    double radius_cap = 4.0;       // fill radius = min(absorbing radius, cap)
    std::size_t absorbing_terms = 4;
    double C_p = 4.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct AttractorEstimate {
    PointCloud cloud;                 // image at time `at` from the largest horizon
    std::vector<double> horizons;
    std::vector<PointCloud> clouds;   // one per horizon
    std::vector<double> history;      // d_H(cloud_k | cloud_{k+1})
    std::vector<double> radii;        // fill radius used per horizon
    std::vector<double> raw_radii;    // absorbing radius before the cap, NaN without a certificate
    std::size_t dropped = 0;
    std::uint64_t seed = 0;
    std::string config_hash;
};

/// Ball source for the initial fill; without a certificate the fill radius is the cap.
struct BallSource {
    const LyapunovFn* V = nullptr;
    std::optional<StrongCert> cert;
};

/// Pullback estimate on a given noise path: for each horizon n the ball at time at - n
/// is evolved to time `at` along `noise`.
AttractorEstimate pullback_on_path(const SystemSpec& sys, const RoughPath& noise, const AttractorConfig& cfg,
                                   const BallSource& ball, double at = 0.0, Exec exec = Exec::Parallel);

/// Draws the noise on [-(max horizon + margin), t_fwd] from cfg.seed and runs pullback_on_path.
AttractorEstimate pullback_attractor(const SystemSpec& sys, const BallSource& ball, const AttractorConfig& cfg,
                                     double t_fwd = 0.0, Exec exec = Exec::Parallel);
/// Noise window used by pullback_attractor.
RoughPath attractor_noise(const SystemSpec& sys, const AttractorConfig& cfg, const BallSource& ball,
                          double t_fwd = 0.0);

struct OracleConfig {
    Box starts{{-3.0, -3.0}, {3.0, 3.0}};
    std::size_t res = 9;        // starts per axis
    double T = 200.0;
    double clip = 100.0;        // transient discarded
    double dt = 0.01;
    std::size_t record_stride = 1;
    std::size_t fill_angles = 512;   // unstable-manifold fill around unstable equilibria
    double fill_radius = 1e-3;
    double fill_T = 150.0;
    double voxel = 0.01;
};

struct DeterministicAttractor {
    PointCloud cloud;
    std::vector<std::vector<double>> equilibria;
    std::vector<bool> unstable;
};

/// Long-run RK4 attractor: clipped runs from a grid of starts, equilibria found by
/// Newton, and trajectories leaving each unstable equilibrium; merged and deduplicated.
DeterministicAttractor deterministic_attractor(const DriftField& f, const OracleConfig& cfg,
                                               Exec exec = Exec::Parallel);

struct TableRow {
    double parameter = 0.0;
    double mean = 0.0;
    double std_err = 0.0;
    std::size_t n_flagged = 0;
    std::vector<double> values;  // per seed
};

struct ExperimentTable {
    std::string parameter;  // parameter column name
    std::string value;      // value column name
    std::vector<TableRow> rows;
    std::string provenance;  // JSON
};

struct SemicontinuityConfig {
    AttractorConfig attractor;     // a single horizon is used: the last one
    std::vector<double> C_g_list;  // strictly decreasing, positive
    std::string diffusion = "linear-bump";
    std::size_t n_seeds = 20;
    std::uint64_t master_seed = 0;
};

/// Per C_g and seed: estimate with that diffusion intensity on the seed's noise, d_H to A0.
ExperimentTable semicontinuity_experiment(const SystemSpec& sys, const BallSource& ball,
                                          const SemicontinuityConfig& cfg, const PointCloud& A0,
                                          Exec exec = Exec::Parallel);

struct StepsizeConfig {
    AttractorConfig attractor;       // noise dt must equal the smallest step
    std::vector<double> steps;       // strictly decreasing, each a multiple of noise dt
    std::size_t n_seeds = 10;
    std::uint64_t master_seed = 0;
};

/// d_H(A^step | A^{smallest step}) with the noise coarsened to each step.
ExperimentTable stepsize_experiment(const SystemSpec& sys, const StepsizeConfig& cfg, Exec exec = Exec::Parallel);

struct DyadicConfig {
    AttractorConfig attractor;  // noise dt must be 2^-L with L >= every level
    std::vector<int> levels;    // strictly increasing
    std::size_t n_seeds = 10;
    std::uint64_t master_seed = 0;
};

/// d_H(estimate on the level-n dyadic approximation | full-resolution estimate), same draw.
ExperimentTable dyadic_experiment(const SystemSpec& sys, const DyadicConfig& cfg, Exec exec = Exec::Parallel);

struct LocalStabilityConfig {
    NoiseConfig noise;              // t_fwd is the fit horizon
    std::vector<double> C_g_list;
    std::string diffusion = "vanishing-at-zero";
    std::vector<double> y0_radii{0.1};
    std::size_t directions = 4;     // starts per radius, evenly spaced in the first two axes
    double domain_radius = 1.0;     // leaving this ball flags the run as escaped
    double floor = 1e-250;          // fit stops once |y| falls below this
    std::size_t n_seeds = 10;
    std::uint64_t master_seed = 0;
};

struct SlopeFit {
    double slope = 0.0;
    bool degenerate = false;
    bool escaped = false;
};

/// Least-squares slope of log|y_t| against t over the stored nodes.
SlopeFit fit_log_slope(const Trajectory& tr, double domain_radius, double floor = 1e-250);

/// Table of mean fitted slopes per C_g; escaped and degenerate runs are excluded and counted.
ExperimentTable local_stability_experiment(const SystemSpec& sys, const LocalStabilityConfig& cfg,
                                           Exec exec = Exec::Parallel);

void write_cloud_csv(const std::string& file, const PointCloud& c);
void write_table_csv(const std::string& file, const ExperimentTable& t);
std::string estimate_json(const AttractorEstimate& e);

} // namespace roughlyap
