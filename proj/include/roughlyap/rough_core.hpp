#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "roughlyap/common.hpp"

namespace roughlyap {

/// Uniform time grid t_k = t0 + k*dt, k = 0..n_steps.
struct Grid {
    double t0 = 0.0;
    double dt = 1.0;
    std::size_t n_steps = 0;

    std::size_t nodes() const { return n_steps + 1; }
    double time(std::size_t k) const { return t0 + dt * static_cast<double>(k); }
    double t_end() const { return time(n_steps); }
    /// Node index of time t. Throws ParameterError if t is not a grid node.
    std::size_t index_of(double t) const;
    bool has_node(double t) const;
    void validate() const;
};

struct Provenance {
    std::string generator;   // "fbm", "lift", "dyadic", "shift", ...
    std::string method;      // "circulant", "cholesky", ...
    double hurst = -1.0;     // < 0 when unknown
    std::uint64_t seed = 0;
};

/// Sampled path, values stored node-major: values[k*dims + i].
struct PathSample {
    Grid grid;
    std::size_t dims = 1;
    std::vector<double> values;
    Provenance meta;

    const double* node(std::size_t k) const { return values.data() + k * dims; }
    double* node(std::size_t k) { return values.data() + k * dims; }
    void validate() const;
};

/// Path plus one second-level term per grid step; level2[k*m*m + a*m + b]
/// is the (a,b) entry on [t_k, t_{k+1}].
struct RoughPath {
    PathSample path;
    std::vector<double> level2;

    std::size_t dims() const { return path.dims; }
    const Grid& grid() const { return path.grid; }
    const double* step_level2(std::size_t k) const { return level2.data() + k * dims() * dims(); }
    void validate() const;
};

/// First- and second-level increment over [t_i, t_j].
struct Increment {
    std::vector<double> x;   // m
    std::vector<double> xx;  // m*m, row-major
};

enum class FbmMethod { Auto, Circulant, Cholesky };

struct FbmConfig {
    double hurst = 0.4;
    std::size_t dims = 1;
    Grid grid;
    std::uint64_t seed = 0;
    FbmMethod method = FbmMethod::Auto;
};

/// Fractional Brownian motion on cfg.grid with independent components.
/// The path is pinned to zero at time 0 when 0 is a grid node, otherwise at node 0.
PathSample generate_fbm(const FbmConfig& cfg);

/// Piecewise-linear lift: second level 0.5 * dx (x) dx on every step.
RoughPath lift(const PathSample& path);

inline RoughPath make_noise(const FbmConfig& cfg) { return lift(generate_fbm(cfg)); }

/// Chen recombination of steps i..j-1; (x, xx) on [t_i, t_j]. i == j gives zeros.
Increment chen_combine(const RoughPath& rp, std::size_t i, std::size_t j);
void chen_combine_into(const RoughPath& rp, std::size_t i, std::size_t j, double* x, double* xx);

/// Exponents for the variation and Hoelder norms: 1/3 < alpha < nu <= 1/2, p = 1/alpha, q = p/2.
struct NormParams {
    double p = 2.5;
    double q = 1.25;
    double alpha = 0.4;
    double nu = 0.5;

    static NormParams from_alpha(double alpha, double nu);
    /// alpha halfway between 1/3 and H, nu = H.
    static NormParams for_hurst(double hurst);
    void validate() const;
};

struct PVarTerms {
    double path_sum = 0.0;    // sup over grid partitions of sum |x_{s,t}|^p
    double level2_sum = 0.0;  // sup over grid partitions of sum |XX_{s,t}|_F^q
    double norm = 0.0;        // (path_sum + level2_sum)^(1/p)
};

/// Variation norm on [t_i, t_j] over partitions made of grid nodes.
PVarTerms p_var_terms(const RoughPath& rp, std::size_t i, std::size_t j, const NormParams& np);
double p_var_norm(const RoughPath& rp, std::size_t i, std::size_t j, const NormParams& np);

/// Norm on [t_i, t_k] for every k in i..j (entry k-i), from one forward pass.
/// With stride > 1 only nodes i + stride*r are used as partition points and the
/// value at k is the one of the last used node <= k, which is a lower bound.
std::vector<double> p_var_norm_prefix(const RoughPath& rp, std::size_t i, std::size_t j,
                                      const NormParams& np, std::size_t stride = 1);

/// sup over scalar-path partitions of sum |x_{s,t}|^p (path term only).
double p_variation_sum(const PathSample& path, std::size_t i, std::size_t j, double p);

/// Hoelder seminorm on [t_i, t_j]: max over node pairs of |x_{s,t}|/(t-s)^alpha.
double holder_norm(const PathSample& path, std::size_t i, std::size_t j, double alpha);

/// Piecewise-linear approximation through the nodes k / 2^level on the coarse
/// dyadic grid, with its own piecewise-linear lift.
RoughPath dyadic_approx(const RoughPath& rp, int level);

/// Same path on a grid refined by `factor` (linear interpolation, linear lift).
RoughPath refine_linear(const RoughPath& rp, std::size_t factor);

/// Keep every `stride`-th node; second levels are Chen-combined (no information lost
/// at the retained nodes).
RoughPath coarsen(const RoughPath& rp, std::size_t stride);

/// Segment [h, h + length] of rp re-based to start at zero on a grid starting at 0.
/// length <= 0 takes everything from h to the end of the window.
RoughPath shift(const RoughPath& rp, double h, double length = 0.0);

/// Sample variance of |X_{0,t}|^2 at dyadic lags; one fresh path per sample.
struct ScalingRow {
    double lag = 0.0;
    double mean_sq = 0.0;
};
std::vector<ScalingRow> fbm_variance_scaling(const FbmConfig& base, std::size_t samples,
                                             Exec exec = Exec::Parallel);
/// Least-squares slope of log mean_sq against log lag.
double loglog_slope(const std::vector<ScalingRow>& rows);

// --- file formats -------------------------------------------------------

/// CSV header "t,x1..xm[,X11..Xmm]". Row k carries the second level of the
/// step ending at t_k (row 0 is zero).
void write_path_csv(const std::string& file, const RoughPath& rp);
void write_path_csv(const std::string& file, const PathSample& path);
/// Sidecar JSON with grid, H, seed, method.
void write_path_meta(const std::string& file, const PathSample& path);
/// Reads a CSV written by write_path_csv; if the level-2 columns are absent the
/// piecewise-linear lift is used. The sidecar, if given and present, fills meta.
RoughPath read_path_csv(const std::string& file, const std::string& meta_file = "");

} // namespace roughlyap
