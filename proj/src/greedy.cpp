#include "roughlyap/greedy.hpp"

#include "json.hpp"

#include <cmath>
#include <limits>

namespace roughlyap {

void GreedyConfig::validate() const
{
    if (!(lambda > 0.0 && lambda < 1.0)) throw ParameterError("greedy: lambda must lie in (0,1)");
    if (!(C_p > 0.0) || !(C_g > 0.0)) throw ParameterError("greedy: C_p and C_g must be positive");
}

namespace {

/// Norms on [s, k] for k = s+1, s+2, ... computed one node at a time, so the
/// scan can stop as soon as the threshold is crossed. Values agree bitwise
/// with p_var_norm on the same interval.
class GrowingNorm {
public:
    GrowingNorm(const RoughPath& rp, std::size_t s, const NormParams& np) : rp_(rp), s_(s), np_(np)
    {
        best1_.push_back(0.0);
        best2_.push_back(0.0);
    }

    double next()
    {
        const std::size_t m = rp_.dims();
        const std::size_t k = s_ + best1_.size();  // node being added
        x_.resize(x_.size() + m, 0.0);
        xx_.resize(xx_.size() + m * m, 0.0);
        const double* lo = rp_.path.node(k - 1);
        const double* hi = rp_.path.node(k);
        const double* step = rp_.step_level2(k - 1);
        double b1 = -std::numeric_limits<double>::infinity(), b2 = b1;
        for (std::size_t l = 0; l < best1_.size(); ++l) {
            double* x = x_.data() + l * m;
            double* xx = xx_.data() + l * m * m;
            for (std::size_t a = 0; a < m; ++a)
                for (std::size_t b = 0; b < m; ++b) xx[a * m + b] += step[a * m + b] + x[a] * (hi[b] - lo[b]);
            for (std::size_t a = 0; a < m; ++a) x[a] += hi[a] - lo[a];
            const double* xl = rp_.path.node(s_ + l);
            double s = 0.0, f = 0.0;
            for (std::size_t a = 0; a < m; ++a) {
                const double d = hi[a] - xl[a];
                s += d * d;
            }
            for (std::size_t e = 0; e < m * m; ++e) f += xx[e] * xx[e];
            const double v1 = best1_[l] + std::pow(std::sqrt(s), np_.p);
            const double v2 = best2_[l] + std::pow(std::sqrt(f), np_.q);
            if (v1 > b1) b1 = v1;
            if (v2 > b2) b2 = v2;
        }
        best1_.push_back(b1);
        best2_.push_back(b2);
        return std::pow(b1 + b2, 1.0 / np_.p);
    }

private:
    const RoughPath& rp_;
    std::size_t s_;
    NormParams np_;
    std::vector<double> best1_, best2_, x_, xx_;
};

} // namespace

GreedyPartition greedy_times(const RoughPath& rp, std::size_t i, std::size_t j, const GreedyConfig& cfg)
{
    cfg.validate();
    if (i >= j || j > rp.grid().n_steps) throw ParameterError("greedy: need i < j <= n_steps");
    GreedyPartition part;
    part.threshold = cfg.threshold();
    part.nodes.push_back(i);
    std::size_t start = i;
    while (start < j) {
        GrowingNorm grow(rp, start, cfg.params);
        double last_ok = 0.0;
        std::size_t k = start;
        bool forced = false;
        while (k < j) {
            const double v = grow.next();
            if (v > part.threshold) {
                if (k == start) {
                    forced = true;
                    last_ok = v;
                    ++k;
                }
                break;
            }
            last_ok = v;
            ++k;
        }
        part.nodes.push_back(k);
        part.norms.push_back(last_ok);
        part.degenerate.push_back(forced);
        start = k;
    }
    return part;
}

CountBound count_bound_report(const GreedyPartition& part, const RoughPath& rp, std::size_t i, std::size_t j,
                              const GreedyConfig& cfg)
{
    CountBound r;
    r.N = part.count();
    r.total_norm = p_var_norm(rp, i, j, cfg.params);
    const double p = cfg.params.p;
    r.bound = 1.0 + std::pow(r.total_norm / part.threshold, p);
    r.ok = static_cast<double>(r.N) <= r.bound;
    return r;
}

std::string partition_json(const GreedyPartition& part)
{
    nlohmann::ordered_json j;
    j["threshold"] = part.threshold;
    j["nodes"] = part.nodes;
    j["norms"] = part.norms;
    j["degenerate_flags"] = part.degenerate;
    return j.dump(2);
}

} // namespace roughlyap
