#pragma once

#include <string>
#include <vector>

#include "roughlyap/rough_core.hpp"

namespace roughlyap {

struct GreedyConfig {
    double lambda = 0.5;
    double C_p = 4.0;  // sewing constant; no value is known, kept as a knob
    double C_g = 0.05;
    NormParams params;

    double threshold() const { return lambda / (16.0 * C_p * C_g); }
    void validate() const;
};

struct GreedyPartition {
    double threshold = 0.0;
    std::vector<std::size_t> nodes;   // tau_0 = i < tau_1 < ... < tau_N = j
    std::vector<double> norms;        // norm on [tau_k, tau_{k+1}]
    std::vector<bool> degenerate;     // single step already above threshold

    std::size_t count() const { return norms.size(); }
};

/// Stopping times on [t_i, t_j]: each next node is the last grid node whose
/// subinterval norm stays <= threshold. A single step above threshold is taken
/// anyway and flagged.
GreedyPartition greedy_times(const RoughPath& rp, std::size_t i, std::size_t j, const GreedyConfig& cfg);

struct CountBound {
    std::size_t N = 0;
    double bound = 0.0;       // 1 + threshold^-p * norm^p
    double total_norm = 0.0;  // norm on [t_i, t_j]
    bool ok = false;
};
CountBound count_bound_report(const GreedyPartition& part, const RoughPath& rp, std::size_t i, std::size_t j,
                              const GreedyConfig& cfg);

/// {threshold, nodes[], norms[], degenerate_flags[]}
std::string partition_json(const GreedyPartition& part);

} // namespace roughlyap
