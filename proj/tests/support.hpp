#pragma once

// Generators and independent oracles shared by the unit and acceptance tests.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "roughlyap/rough_core.hpp"

namespace testsupport {

using namespace roughlyap;

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
    std::size_t index(std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_); }
    std::uint64_t u64() { return rng_(); }
    std::mt19937_64& engine() { return rng_; }

    /// Gaussian random walk with occasional flat stretches and jumps.
    PathSample walk(std::size_t n_steps, std::size_t dims, double dt = 0.125)
    {
        PathSample p;
        p.grid = Grid{0.0, dt, n_steps};
        p.dims = dims;
        p.values.assign((n_steps + 1) * dims, 0.0);
        for (std::size_t k = 1; k <= n_steps; ++k) {
            const double mode = uniform(0.0, 1.0);
            for (std::size_t a = 0; a < dims; ++a) {
                double d = normal();
                if (mode < 0.15) d = 0.0;
                if (mode > 0.9) d *= 5.0;
                p.values[k * dims + a] = p.values[(k - 1) * dims + a] + d;
            }
        }
        return p;
    }

    RoughPath fbm(double hurst, std::size_t dims, std::size_t n_steps, double dt, double t0 = 0.0)
    {
        FbmConfig c;
        c.hurst = hurst;
        c.dims = dims;
        c.grid = Grid{t0, dt, n_steps};
        c.seed = u64();
        return make_noise(c);
    }

private:
    std::mt19937_64 rng_;
};

/// Visit every grid partition of [i, j] as its list of nodes.
inline void for_each_partition(std::size_t i, std::size_t j, const std::function<void(const std::vector<std::size_t>&)>& fn)
{
    const std::size_t inner = j > i + 1 ? j - i - 1 : 0;
    std::vector<std::size_t> nodes;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << inner); ++mask) {
        nodes.assign(1, i);
        for (std::size_t b = 0; b < inner; ++b)
            if (mask >> b & 1) nodes.push_back(i + 1 + b);
        nodes.push_back(j);
        fn(nodes);
    }
}

/// Exhaustive sup of sum |x_{s,t}|^p, summed left to right.
inline double enum_path_sum(const PathSample& path, std::size_t i, std::size_t j, double p)
{
    double best = 0.0;
    for_each_partition(i, j, [&](const std::vector<std::size_t>& nodes) {
        double s = 0.0;
        for (std::size_t r = 0; r + 1 < nodes.size(); ++r) {
            double q = 0.0;
            for (std::size_t a = 0; a < path.dims; ++a) {
                const double d = path.node(nodes[r + 1])[a] - path.node(nodes[r])[a];
                q += d * d;
            }
            s += std::pow(std::sqrt(q), p);
        }
        if (s > best) best = s;
    });
    return best;
}

/// Level-2 term from iterated integrals computed directly by the midpoint rule on each
/// linear step (exact for piecewise-linear paths).
inline std::vector<double> direct_level2(const PathSample& path, std::size_t s, std::size_t t)
{
    const std::size_t m = path.dims;
    std::vector<double> xx(m * m, 0.0);
    for (std::size_t k = s; k < t; ++k)
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < m; ++b) {
                const double mid_a = 0.5 * (path.node(k)[a] + path.node(k + 1)[a]) - path.node(s)[a];
                xx[a * m + b] += mid_a * (path.node(k + 1)[b] - path.node(k)[b]);
            }
    return xx;
}

inline double enum_level2_sum(const RoughPath& rp, std::size_t i, std::size_t j, double q)
{
    double best = 0.0;
    for_each_partition(i, j, [&](const std::vector<std::size_t>& nodes) {
        double s = 0.0;
        for (std::size_t r = 0; r + 1 < nodes.size(); ++r) {
            const auto xx = direct_level2(rp.path, nodes[r], nodes[r + 1]);
            double f = 0.0;
            for (double v : xx) f += v * v;
            s += std::pow(std::sqrt(f), q);
        }
        if (s > best) best = s;
    });
    return best;
}

inline double pairwise_holder(const PathSample& path, std::size_t i, std::size_t j, double alpha)
{
    double best = 0.0;
    for (std::size_t s = i; s <= j; ++s)
        for (std::size_t t = s + 1; t <= j; ++t) {
            double q = 0.0;
            for (std::size_t a = 0; a < path.dims; ++a) {
                const double d = path.node(t)[a] - path.node(s)[a];
                q += d * d;
            }
            best = std::max(best, std::sqrt(q) / std::pow(path.grid.time(t) - path.grid.time(s), alpha));
        }
    return best;
}

inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& fn,
                                       std::vector<double> x, double h)
{
    std::vector<double> g(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double x0 = x[k];
        x[k] = x0 + h;
        const double fp = fn(x);
        x[k] = x0 - h;
        const double fm = fn(x);
        x[k] = x0;
        g[k] = (fp - fm) / (2.0 * h);
    }
    return g;
}

inline double rel_error(const std::vector<double>& a, const std::vector<double>& b)
{
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        num += (a[k] - b[k]) * (a[k] - b[k]);
        den += b[k] * b[k];
    }
    return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

inline double chen_residual(const RoughPath& rp, std::size_t s, std::size_t u, std::size_t t)
{
    const std::size_t m = rp.dims();
    const Increment a = chen_combine(rp, s, u), b = chen_combine(rp, u, t), c = chen_combine(rp, s, t);
    double r = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t k = 0; k < m; ++k)
            r = std::max(r, std::abs(c.xx[i * m + k] - a.xx[i * m + k] - b.xx[i * m + k] - a.x[i] * b.x[k]));
    return r;
}

} // namespace testsupport
