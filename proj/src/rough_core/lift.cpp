#include "roughlyap/rough_core.hpp"

#include <cmath>

namespace roughlyap {

RoughPath lift(const PathSample& path)
{
    path.validate();
    const std::size_t m = path.dims, n = path.grid.n_steps;
    RoughPath rp;
    rp.path = path;
    rp.level2.assign(n * m * m, 0.0);
    std::vector<double> d(m);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t a = 0; a < m; ++a) d[a] = path.node(k + 1)[a] - path.node(k)[a];
        double* xx = rp.level2.data() + k * m * m;
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < m; ++b) xx[a * m + b] = 0.5 * d[a] * d[b];
    }
    return rp;
}

void chen_combine_into(const RoughPath& rp, std::size_t i, std::size_t j, double* x, double* xx)
{
    if (i > j || j > rp.grid().n_steps) throw ParameterError("chen_combine: need 0 <= i <= j <= n_steps");
    const std::size_t m = rp.dims();
    std::fill(x, x + m, 0.0);
    std::fill(xx, xx + m * m, 0.0);
    for (std::size_t k = i; k < j; ++k) {
        const double* lo = rp.path.node(k);
        const double* hi = rp.path.node(k + 1);
        const double* step = rp.step_level2(k);
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < m; ++b) xx[a * m + b] += step[a * m + b] + x[a] * (hi[b] - lo[b]);
        for (std::size_t a = 0; a < m; ++a) x[a] += hi[a] - lo[a];
    }
}

Increment chen_combine(const RoughPath& rp, std::size_t i, std::size_t j)
{
    Increment inc;
    inc.x.resize(rp.dims());
    inc.xx.resize(rp.dims() * rp.dims());
    chen_combine_into(rp, i, j, inc.x.data(), inc.xx.data());
    return inc;
}

RoughPath dyadic_approx(const RoughPath& rp, int level)
{
    if (level < 0 || level > 60) throw ParameterError("dyadic level out of range");
    const Grid& g = rp.grid();
    const double h = std::ldexp(1.0, -level);
    const double ratio = h / g.dt;
    const double r = std::round(ratio);
    if (ratio < 1.0 - 1e-9) throw ParameterError("dyadic level finer than the source grid");
    if (std::abs(ratio - r) > 1e-9 * ratio) throw ParameterError("dyadic grid is not a subgrid of the source grid");
    const auto stride = static_cast<std::size_t>(r);

    // first dyadic node at or after t0
    const double first = std::ceil(g.t0 / h - 1e-9) * h;
    const std::size_t k0 = g.index_of(first);
    if (k0 + stride > g.n_steps) throw ParameterError("dyadic grid has fewer than two nodes in the window");
    const std::size_t n = (g.n_steps - k0) / stride;

    PathSample p;
    p.grid = Grid{g.time(k0), h, n};
    p.dims = rp.dims();
    p.values.resize((n + 1) * p.dims);
    for (std::size_t k = 0; k <= n; ++k)
        std::copy(rp.path.node(k0 + k * stride), rp.path.node(k0 + k * stride) + p.dims, p.node(k));
    p.meta = rp.path.meta;
    p.meta.generator = "dyadic";
    return lift(p);
}

RoughPath refine_linear(const RoughPath& rp, std::size_t factor)
{
    if (factor < 1) throw ParameterError("refine factor must be >= 1");
    const Grid& g = rp.grid();
    const std::size_t m = rp.dims();
    PathSample p;
    p.grid = Grid{g.t0, g.dt / static_cast<double>(factor), g.n_steps * factor};
    p.dims = m;
    p.values.resize(p.grid.nodes() * m);
    for (std::size_t k = 0; k < g.n_steps; ++k) {
        const double* lo = rp.path.node(k);
        const double* hi = rp.path.node(k + 1);
        for (std::size_t s = 0; s < factor; ++s) {
            const double w = static_cast<double>(s) / static_cast<double>(factor);
            for (std::size_t a = 0; a < m; ++a) p.node(k * factor + s)[a] = lo[a] + (hi[a] - lo[a]) * w;
        }
    }
    std::copy(rp.path.node(g.n_steps), rp.path.node(g.n_steps) + m, p.node(p.grid.n_steps));
    p.meta = rp.path.meta;
    return lift(p);
}

RoughPath coarsen(const RoughPath& rp, std::size_t stride)
{
    const Grid& g = rp.grid();
    if (stride < 1 || g.n_steps % stride != 0)
        throw ParameterError("coarsen: stride must divide the number of steps");
    const std::size_t m = rp.dims(), n = g.n_steps / stride;
    RoughPath out;
    out.path.grid = Grid{g.t0, g.dt * static_cast<double>(stride), n};
    out.path.dims = m;
    out.path.meta = rp.path.meta;
    out.path.values.resize((n + 1) * m);
    out.level2.resize(n * m * m);
    std::vector<double> x(m);
    for (std::size_t k = 0; k <= n; ++k) std::copy(rp.path.node(k * stride), rp.path.node(k * stride) + m, out.path.node(k));
    for (std::size_t k = 0; k < n; ++k)
        chen_combine_into(rp, k * stride, (k + 1) * stride, x.data(), out.level2.data() + k * m * m);
    return out;
}

RoughPath shift(const RoughPath& rp, double h, double length)
{
    const Grid& g = rp.grid();
    if (!g.has_node(h)) throw ParameterError("shift: offset is not aligned to the grid or outside the window");
    const std::size_t i0 = g.index_of(h);
    std::size_t i1 = g.n_steps;
    if (length > 0.0) {
        if (!g.has_node(h + length)) throw ParameterError("shift: window end outside the stored path");
        i1 = g.index_of(h + length);
    }
    if (i1 <= i0) throw ParameterError("shift: empty window");
    const std::size_t m = rp.dims(), n = i1 - i0;
    RoughPath out;
    out.path.grid = Grid{0.0, g.dt, n};
    out.path.dims = m;
    out.path.meta = rp.path.meta;
    out.path.meta.generator = "shift";
    out.path.values.resize((n + 1) * m);
    const double* base = rp.path.node(i0);
    for (std::size_t k = 0; k <= n; ++k)
        for (std::size_t a = 0; a < m; ++a) out.path.node(k)[a] = rp.path.node(i0 + k)[a] - base[a];
    out.level2.assign(rp.level2.begin() + static_cast<std::ptrdiff_t>(i0 * m * m),
                      rp.level2.begin() + static_cast<std::ptrdiff_t>(i1 * m * m));
    return out;
}

} // namespace roughlyap
