#include "roughlyap/rough_core.hpp"

#include <omp.h>

#include <cmath>
#include <cstdio>

namespace roughlyap {

void set_threads(int n)
{
    if (n > 0) omp_set_num_threads(n);
}

int max_threads() { return omp_get_max_threads(); }

std::uint64_t mix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::string content_hash(const std::string& bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void Grid::validate() const
{
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ParameterError("grid: dt must be positive");
    if (n_steps < 1) throw ParameterError("grid: need at least one step");
    if (!std::isfinite(t0)) throw ParameterError("grid: t0 not finite");
}

bool Grid::has_node(double t) const
{
    const double r = (t - t0) / dt;
    const double k = std::round(r);
    return std::abs(r - k) <= 1e-9 * std::max(1.0, std::abs(r)) && k >= 0.0
           && k <= static_cast<double>(n_steps);
}

std::size_t Grid::index_of(double t) const
{
    if (!has_node(t)) throw ParameterError("time " + std::to_string(t) + " is not a grid node");
    return static_cast<std::size_t>(std::llround((t - t0) / dt));
}

void PathSample::validate() const
{
    grid.validate();
    if (dims < 1) throw ParameterError("path: dims must be >= 1");
    if (values.size() != grid.nodes() * dims) throw ParameterError("path: values size does not match grid");
    for (double v : values)
        if (!std::isfinite(v)) throw ParameterError("path: non-finite value");
}

void RoughPath::validate() const
{
    path.validate();
    if (level2.size() != path.grid.n_steps * dims() * dims())
        throw ParameterError("rough path: level2 size does not match grid");
}


double Box::volume() const
{
    double v = 1.0;
    for (std::size_t i = 0; i < dim(); ++i) v *= hi[i] - lo[i];
    return v;
}

bool Box::contains(const double* z) const
{
    for (std::size_t i = 0; i < dim(); ++i)
        if (z[i] < lo[i] || z[i] > hi[i]) return false;
    return true;
}

void Box::validate() const
{
    if (lo.empty() || lo.size() != hi.size()) throw ParameterError("box: lo/hi size mismatch");
    for (std::size_t i = 0; i < dim(); ++i)
        if (!(hi[i] > lo[i]) || !std::isfinite(lo[i]) || !std::isfinite(hi[i]))
            throw ParameterError("box: degenerate axis");
}

Box Box::cube(std::size_t d, double half_width)
{
    return Box{std::vector<double>(d, -half_width), std::vector<double>(d, half_width)};
}

std::size_t BoxGrid::size() const
{
    std::size_t n = 1;
    for (std::size_t i = 0; i < box.dim(); ++i) n *= res;
    return n;
}

void BoxGrid::point(std::size_t k, double* z) const
{
    const std::size_t d = box.dim();
    for (std::size_t a = d; a-- > 0;) {
        const std::size_t idx = k % res;
        k /= res;
        const double w = res > 1 ? static_cast<double>(idx) / static_cast<double>(res - 1) : 0.5;
        z[a] = box.lo[a] + (box.hi[a] - box.lo[a]) * w;
    }
}

} // namespace roughlyap
