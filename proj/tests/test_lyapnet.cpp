#include "doctest.h"

#include "json.hpp"
#include "roughlyap/lyapnet.hpp"
#include "support.hpp"

using namespace roughlyap;
using testsupport::Gen;

namespace {

RiskData small_data(const SystemSpec& sys, std::size_t m_z, double lambda, std::uint64_t seed)
{
    SamplePlan plan;
    plan.domain = Box::cube(sys.dim(), 2.0);
    plan.m_z = m_z;
    plan.m_psi = 4;
    plan.m_eta = 4;
    plan.seed = seed;
    return build_risk_data(sys.drift, plan, lambda);
}

} // namespace

TEST_SUITE("lyapnet") {

TEST_CASE("parameter flattening round trip")
{
    NetParams n = init_net(3, 7, 0.2, 1);
    CHECK(n.n_params() == 7 * 3 + 2 * 7 + 1);
    n.b2 = 0.25;
    const auto flat = n.flatten();
    REQUIRE(flat.size() == n.n_params());
    CHECK(flat.back() == 0.25);
    CHECK(flat[0] == n.W1[0]);
    CHECK(flat[21] == n.b1[0]);
    CHECK(flat[28] == n.W2[0]);
    NetParams m = init_net(3, 7, 0.2, 2);
    m.assign(flat);
    CHECK(m.flatten() == flat);
    CHECK_THROWS_AS(m.assign(std::vector<double>(3)), ParameterError);
}

TEST_CASE("net value is bounded below by the radial term")
{
    Gen gen(91);
    const NetParams n = init_net(2, 16, 0.3, 3);
    for (int k = 0; k < 2000; ++k) {
        const double z[2] = {gen.uniform(-5.0, 5.0), gen.uniform(-5.0, 5.0)};
        const NetEval e = net_eval(n, z);
        CHECK(e.V >= 0.3 * std::hypot(z[0], z[1]) - 1e-12);
        CHECK(e.V == doctest::Approx(std::abs(e.N) + 0.3 * std::hypot(z[0], z[1])));
    }
}

TEST_CASE("net gradient matches finite differences away from kinks")
{
    Gen gen(92);
    for (int s : {2, 3}) {
        const NetParams n = init_net(2, 16, 0.3, 4, s);
        for (int k = 0; k < 200; ++k) {
            const std::vector<double> z{gen.uniform(-2.0, 2.0), gen.uniform(-2.0, 2.0)};
            const NetEval e = net_eval(n, z.data());
            if (std::abs(e.N) < 1e-3 || std::hypot(z[0], z[1]) < 1e-3) continue;
            const auto fd = testsupport::fd_gradient([&](const std::vector<double>& x) { return net_eval(n, x.data()).V; },
                                                     z, 1e-6);
            CHECK(testsupport::rel_error(e.grad, fd) < 1e-6);
        }
    }
}

TEST_CASE("risk gradient matches finite differences")
{
    const SystemSpec sys = make_fhn();
    const RiskData data = small_data(sys, 40, 0.1, 5);
    TrainConfig cfg;
    cfg.delta_bar = 0.3;
    cfg.C_bar = 0.5;
    for (std::uint64_t seed : {6u, 7u, 8u}) {
        const NetParams n = init_net(2, 8, 0.3, seed);
        const RiskResult r = empirical_risk(n, data, cfg, true);
        REQUIRE(r.loss > 0.0);
        const auto fd = testsupport::fd_gradient(
            [&](const std::vector<double>& th) {
                NetParams m = n;
                m.assign(th);
                return empirical_risk(m, data, cfg, false).loss;
            },
            n.flatten(), 1e-6);
        CHECK(testsupport::rel_error(r.grad, fd) <= 1e-4);
    }
}

TEST_CASE("risk is identical under serial and parallel execution")
{
    const SystemSpec sys = make_pendulum();
    const RiskData data = small_data(sys, 300, 0.1, 9);
    const NetParams n = init_net(2, 12, 0.2, 10);
    TrainConfig cfg;
    const RiskResult a = empirical_risk(n, data, cfg, true, Exec::Serial);
    const RiskResult b = empirical_risk(n, data, cfg, true, Exec::Parallel);
    CHECK(a.loss == b.loss);
    CHECK(a.grad == b.grad);
}

TEST_CASE("risk data is deterministic and sized by the plan")
{
    const SystemSpec sys = make_fhn();
    const RiskData a = small_data(sys, 25, 0.1, 11), b = small_data(sys, 25, 0.1, 11);
    CHECK(a.size() == 25);
    CHECK(a.z == b.z);
    CHECK(a.fvals == b.fvals);
    CHECK(a.fvals.size() == 25 * a.sampler.n_eta() * 2);
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(Box::cube(2, 2.0).contains(a.z.data() + 2 * k));
}

TEST_CASE("training history is nonincreasing and weights stay in the box")
{
    const SystemSpec sys = make_linear_dissipative(1.0, {0.0, 0.0});
    const RiskData data = small_data(sys, 200, 0.1, 12);
    TrainConfig cfg;
    cfg.delta_bar = 0.45;
    cfg.C_bar = 1.05;
    cfg.max_iterations = 200;
    const TrainResult tr = train(init_net(2, 16, 0.5, 13), data, cfg);
    CHECK_FALSE(tr.aborted);
    for (std::size_t k = 1; k < tr.loss_history.size(); ++k) CHECK(tr.loss_history[k] <= tr.loss_history[k - 1]);
    for (double v : tr.theta.flatten()) CHECK(std::abs(v) <= 1.0);
    CHECK(tr.loss_history.back() < tr.loss_history.front());
}

TEST_CASE("training is deterministic and stops at once on a zero-loss start")
{
    const SystemSpec sys = make_linear_dissipative(1.0, {0.0, 0.0});
    const RiskData data = small_data(sys, 100, 0.1, 17);
    TrainConfig cfg;
    cfg.delta_bar = 0.45;
    cfg.C_bar = 1.05;
    const NetParams init = init_net(2, 8, 0.5, 18);
    CHECK(train(init, data, cfg).loss_history == train(init, data, cfg).loss_history);
    NetParams flat = init;
    std::fill(flat.W2.begin(), flat.W2.end(), 0.0);
    const TrainResult tr = train(flat, data, cfg);
    CHECK(tr.converged);
    CHECK(tr.iterations == 0);
    CHECK(tr.loss_history == std::vector<double>{0.0});
    CHECK(tr.theta.flatten() == flat.flatten());
}

TEST_CASE("covering and sample size closed forms")
{
    const Box unit{{0.0, 0.0}, {1.0, 1.0}};
    CHECK(covering_count(unit, 0.1) == 64);
    CHECK(covering_count(Box::cube(2, 2.0), 0.2) == 225);
    const double p = corner_ball_fraction(unit, 0.1);
    CHECK(p == doctest::Approx(M_PI * 0.01 / 4.0));
    const std::size_t m = sample_size(unit, 0.1, 0.05, p);
    CHECK(m == static_cast<std::size_t>(std::ceil(std::log(64.0 / 0.05) / -std::log1p(-p))));
    CHECK(sample_size(unit, 0.1, 0.01, p) > m);
    CHECK_THROWS_AS(sample_size(unit, 0.1, 1.5, p), ParameterError);
}

TEST_CASE("covering centers cover the domain")
{
    Gen gen(93);
    const Box box{{-1.0, 0.0}, {2.0, 0.5}};
    const auto c = covering_centers(box, 0.15);
    REQUIRE(c.size() == 2 * covering_count(box, 0.15));
    for (int k = 0; k < 3000; ++k) {
        const double z[2] = {gen.uniform(-1.0, 2.0), gen.uniform(0.0, 0.5)};
        double best = 1e300;
        for (std::size_t i = 0; i < c.size(); i += 2) best = std::min(best, std::hypot(z[0] - c[i], z[1] - c[i + 1]));
        CHECK(best <= 0.15 + 1e-12);
    }
}

TEST_CASE("zero-output net on a linear system verifies")
{
    const SystemSpec sys = make_linear_dissipative(1.0, {0.0, 0.0});
    NetParams n = init_net(2, 4, 0.5, 14);
    std::fill(n.W2.begin(), n.W2.end(), 0.0);
    TrainConfig cfg;
    cfg.delta_bar = 0.45;
    cfg.C_bar = 1.05;
    const PerturbationSampler ps(2, cfg.lambda, 8, 8, 15);
    const AccuracyReport r = verify_accuracy(n, sys.drift, BoxGrid{Box::cube(2, 2.0), 41}, cfg, 0.05, ps);
    CHECK(r.pass(1.0));
    CHECK(r.worst_margin >= 0.1);
    CHECK(r.min_certified_radius > 0.0);
}

TEST_CASE("accuracy pass set grows with eps")
{
    const SystemSpec sys = make_fhn();
    const NetParams n = init_net(2, 8, 0.3, 19);
    TrainConfig cfg;
    const PerturbationSampler ps(2, cfg.lambda, 4, 4, 20);
    const BoxGrid grid{Box::cube(2, 2.0), 31};
    const AccuracyReport a = verify_accuracy(n, sys.drift, grid, cfg, 0.05, ps);
    const AccuracyReport b = verify_accuracy(n, sys.drift, grid, cfg, 0.1, ps);
    CHECK(b.pass_rate >= a.pass_rate);
    for (std::size_t k = 0; k < a.passed.size(); ++k)
        if (a.passed[k]) CHECK(b.passed[k]);
}

TEST_CASE("checkpoint round trip")
{
    const NetParams n = init_net(2, 5, 0.4, 16, 3);
    TrainResult tr;
    tr.theta = n;
    tr.loss_history = {1.0, 0.5};
    tr.iterations = 1;
    const std::string text = checkpoint_json(n, TrainConfig{}, tr);
    const NetParams back = net_from_json(text);
    CHECK(back.flatten() == n.flatten());
    CHECK(back.s == 3);
    CHECK(back.alpha_bar == 0.4);
    const auto j = nlohmann::json::parse(text);
    CHECK(j["dims"]["h"] == 5);
    CHECK(j["W1"].size() == 5);
}

}
