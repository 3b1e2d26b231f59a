#pragma once

#include <string>
#include <vector>

#include "roughlyap/lyapunov.hpp"
#include "roughlyap/models.hpp"

namespace roughlyap {

/// V(z) = |N(z)| + alpha_bar |z| with N(z) = W2 . relu(W1 z + b1)^s + b2.
struct NetParams {
    std::size_t d = 2, h = 64;
    std::vector<double> W1;  // h x d, row-major
    std::vector<double> b1;  // h
    std::vector<double> W2;  // h
    double b2 = 0.0;
    int s = 2;
    double alpha_bar = 0.1;

    std::size_t n_params() const { return h * d + 2 * h + 1; }
    /// Order: W1, b1, W2, b2.
    std::vector<double> flatten() const;
    void assign(const std::vector<double>& flat);
    void validate() const;
};

/// W1, b1, W2 uniform on [-1, 1], b2 = 0.
NetParams init_net(std::size_t d, std::size_t h, double alpha_bar, std::uint64_t seed, int s = 2);

struct NetEval {
    double N = 0.0;
    double V = 0.0;
    std::vector<double> grad;  // gradient of V; 0 substituted at the kinks N = 0 and z = 0
};

NetEval net_eval(const NetParams& net, const double* z);
/// Wraps the net as a Lyapunov function (alpha(r) = alpha_bar r, L_V from a grid bound on `box`).
LyapunovFn net_lyapunov(const NetParams& net, const Box& box, std::size_t res = 101);

/// Number of cubes of side 2 eps0 / sqrt(d) (each inside an eps0-ball) covering the box.
std::size_t covering_count(const Box& domain, double eps0);
/// Fraction of the box volume taken by an eps0-ball centered at a corner.
double corner_ball_fraction(const Box& domain, double eps0);
/// Smallest m with M (1 - p_min)^m <= rho, at least 1.
std::size_t sample_size(const Box& domain, double eps0, double rho, double p_min);
/// Cube centers of the covering used by covering_count.
std::vector<double> covering_centers(const Box& domain, double eps0);

struct SamplePlan {
    Box domain;
    double eps0 = 0.1;
    double rho = 0.05;
    std::size_t m_z = 0;  // 0 selects sample_size with the corner-ball p_min
    std::size_t m_psi = 8, m_eta = 8;
    std::uint64_t seed = 0;

    std::size_t resolved_m_z() const;
    void validate() const;
};

struct TrainConfig {
    double delta_bar = 0.25;
    double C_bar = 1.0;
    double lambda = 0.1;
    double learning_rate = 0.05;
    std::size_t max_iterations = 5000;
    double tolerance = 1e-6;
    double min_learning_rate = 1e-10;
    double lr_growth = 1.2;  // applied after an improving step
    std::size_t patience = 20;  // steps without improvement before the rate is halved

    void validate() const;
};

/// Fixed samples of the empirical risk: z uniform on the domain, perturbations from a
/// PerturbationSampler; drift values at the perturbed points are evaluated once.
struct RiskData {
    std::size_t d = 0;
    std::vector<double> z;        // m_z x d
    PerturbationSampler sampler{1, 0.0, 1, 1, 0};
    std::vector<double> fvals;    // (m_z x n_eta) x d
    std::vector<unsigned char> flagged;  // non-finite drift at some perturbed point
    std::size_t n_flagged = 0;

    std::size_t size() const { return d ? z.size() / d : 0; }
};

RiskData build_risk_data(const DriftField& f, const SamplePlan& plan, double lambda);

struct RiskResult {
    double loss = 0.0;
    std::vector<double> margins;  // bracket per z: sup term + delta_bar V - C_bar (NaN if flagged)
    std::vector<double> grad;     // loss gradient in flatten() order, when requested
};

/// mean over z of [max_{psi,eta} <gradV, (I+psi) f(z+eta)> + delta_bar V - C_bar]_+^2.
/// The gradient flows through the maximizing (psi, eta) only.
RiskResult empirical_risk(const NetParams& net, const RiskData& data, const TrainConfig& cfg, bool want_grad,
                          Exec exec = Exec::Parallel);

struct TrainResult {
    NetParams theta;
    std::vector<double> loss_history;  // improving losses, starting with the initial one
    std::size_t iterations = 0;
    bool converged = false;
    bool aborted = false;
    std::string diagnostics;
};

/// Projected gradient descent onto [-1, 1]^params. The best iterate is returned; loss_history
/// holds the running best, so it is nonincreasing.
TrainResult train(const NetParams& init, const RiskData& data, const TrainConfig& cfg, Exec exec = Exec::Parallel);

struct AccuracyReport {
    std::size_t points = 0;
    std::size_t failures = 0;
    std::size_t flagged = 0;
    double pass_rate = 0.0;
    double worst_margin = 0.0;  // min over points of 2 eps - bracket
    std::vector<double> worst_point;
    std::vector<unsigned char> passed;  // per grid point
    double lipschitz_net = 0.0;      // sampled bound on |gradV| + |hess N|
    double lipschitz_aggregate = 0.0;  // lipschitz_net (1 + lambda) (max|f| + max|Df|)
    double min_certified_radius = 0.0;  // margin / aggregate over passing points
    double mean_certified_radius = 0.0;

    bool pass(double threshold) const { return points > flagged && pass_rate >= threshold; }
};

/// Rechecks bracket <= 2 eps on a grid of the domain with the given perturbation samples.
AccuracyReport verify_accuracy(const NetParams& net, const DriftField& f, const BoxGrid& grid, const TrainConfig& cfg,
                               double eps, const PerturbationSampler& sampler, Exec exec = Exec::Parallel);

std::string checkpoint_json(const NetParams& net, const TrainConfig& cfg, const TrainResult& tr);
NetParams net_from_json(const std::string& text);
std::string accuracy_json(const AccuracyReport& r, const BoxGrid& grid, const TrainConfig& cfg, double eps);

} // namespace roughlyap
