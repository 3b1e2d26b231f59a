#include "roughlyap/rough_core.hpp"

#include <cmath>
#include <limits>

namespace roughlyap {

NormParams NormParams::from_alpha(double alpha, double nu)
{
    NormParams np;
    np.alpha = alpha;
    np.nu = nu;
    np.p = 1.0 / alpha;
    np.q = np.p / 2.0;
    np.validate();
    return np;
}

NormParams NormParams::for_hurst(double hurst)
{
    return from_alpha(0.5 * (1.0 / 3.0 + hurst), hurst);
}

void NormParams::validate() const
{
    if (!(alpha > 1.0 / 3.0 && alpha < nu && nu <= 0.5))
        throw ParameterError("norm params: need 1/3 < alpha < nu <= 1/2");
    if (std::abs(p * alpha - 1.0) > 1e-12 || std::abs(q - p / 2.0) > 1e-12)
        throw ParameterError("norm params: need p = 1/alpha and q = p/2");
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double euclid(const double* v, std::size_t m)
{
    double s = 0.0;
    for (std::size_t a = 0; a < m; ++a) s += v[a] * v[a];
    return std::sqrt(s);
}

/// Push-style dynamic program over the partition points i, i+stride, ...
/// best1/best2 are indexed by used-node ordinal.
void pvar_dp(const RoughPath& rp, std::size_t i, std::size_t j, const NormParams& np, std::size_t stride,
             std::vector<double>& best1, std::vector<double>& best2)
{
    const std::size_t m = rp.dims();
    const std::size_t n_used = (j - i) / stride + 1;
    best1.assign(n_used, kNegInf);
    best2.assign(n_used, kNegInf);
    best1[0] = 0.0;
    best2[0] = 0.0;
    std::vector<double> x(m), xx(m * m);
    for (std::size_t ul = 0; ul + 1 < n_used; ++ul) {
        const std::size_t l = i + ul * stride;
        const double b1 = best1[ul], b2 = best2[ul];
        std::fill(x.begin(), x.end(), 0.0);
        std::fill(xx.begin(), xx.end(), 0.0);
        const double* xl = rp.path.node(l);
        for (std::size_t k = l + 1, uk = ul; k <= i + (n_used - 1) * stride; ++k) {
            const double* lo = rp.path.node(k - 1);
            const double* hi = rp.path.node(k);
            const double* step = rp.step_level2(k - 1);
            for (std::size_t a = 0; a < m; ++a)
                for (std::size_t b = 0; b < m; ++b) xx[a * m + b] += step[a * m + b] + x[a] * (hi[b] - lo[b]);
            for (std::size_t a = 0; a < m; ++a) x[a] += hi[a] - lo[a];
            if ((k - i) % stride != 0) continue;
            ++uk;
            double s = 0.0;
            for (std::size_t a = 0; a < m; ++a) {
                const double d = hi[a] - xl[a];
                s += d * d;
            }
            const double t1 = std::pow(std::sqrt(s), np.p);
            const double t2 = std::pow(euclid(xx.data(), m * m), np.q);
            if (b1 + t1 > best1[uk]) best1[uk] = b1 + t1;
            if (b2 + t2 > best2[uk]) best2[uk] = b2 + t2;
        }
    }
    if (!std::isfinite(best1.back()) || !std::isfinite(best2.back()))
        throw ComputationError("p-variation overflow: increments too large");
}

void check_interval(const RoughPath& rp, std::size_t i, std::size_t j)
{
    if (i > j || j > rp.grid().n_steps) throw ParameterError("interval must satisfy i <= j <= n_steps");
}

} // namespace

PVarTerms p_var_terms(const RoughPath& rp, std::size_t i, std::size_t j, const NormParams& np)
{
    check_interval(rp, i, j);
    PVarTerms t;
    if (i == j) return t;
    std::vector<double> b1, b2;
    pvar_dp(rp, i, j, np, 1, b1, b2);
    t.path_sum = b1.back();
    t.level2_sum = b2.back();
    t.norm = std::pow(t.path_sum + t.level2_sum, 1.0 / np.p);
    return t;
}

double p_var_norm(const RoughPath& rp, std::size_t i, std::size_t j, const NormParams& np)
{
    return p_var_terms(rp, i, j, np).norm;
}

std::vector<double> p_var_norm_prefix(const RoughPath& rp, std::size_t i, std::size_t j, const NormParams& np,
                                      std::size_t stride)
{
    check_interval(rp, i, j);
    if (stride < 1) throw ParameterError("stride must be >= 1");
    std::vector<double> out(j - i + 1, 0.0);
    if (i == j) return out;
    std::vector<double> b1, b2;
    pvar_dp(rp, i, j, np, stride, b1, b2);
    for (std::size_t k = 0; k < out.size(); ++k) {
        const std::size_t u = k / stride;
        out[k] = std::pow(b1[u] + b2[u], 1.0 / np.p);
    }
    return out;
}

double p_variation_sum(const PathSample& path, std::size_t i, std::size_t j, double p)
{
    if (i > j || j > path.grid.n_steps) throw ParameterError("interval must satisfy i <= j <= n_steps");
    const std::size_t m = path.dims, n = j - i;
    std::vector<double> best(n + 1, kNegInf);
    best[0] = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
        const double* xl = path.node(i + l);
        for (std::size_t k = l + 1; k <= n; ++k) {
            const double* xk = path.node(i + k);
            double s = 0.0;
            for (std::size_t a = 0; a < m; ++a) {
                const double d = xk[a] - xl[a];
                s += d * d;
            }
            const double v = best[l] + std::pow(std::sqrt(s), p);
            if (v > best[k]) best[k] = v;
        }
    }
    return best[n];
}

double holder_norm(const PathSample& path, std::size_t i, std::size_t j, double alpha)
{
    if (i >= j || j > path.grid.n_steps) throw ParameterError("holder_norm: need i < j <= n_steps");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("holder_norm: alpha must lie in (0,1)");
    const std::size_t m = path.dims;
    double best = 0.0;
    for (std::size_t l = i; l < j; ++l)
        for (std::size_t k = l + 1; k <= j; ++k) {
            double s = 0.0;
            for (std::size_t a = 0; a < m; ++a) {
                const double d = path.node(k)[a] - path.node(l)[a];
                s += d * d;
            }
            const double v = std::sqrt(s) / std::pow(path.grid.dt * static_cast<double>(k - l), alpha);
            if (v > best) best = v;
        }
    return best;
}

} // namespace roughlyap
