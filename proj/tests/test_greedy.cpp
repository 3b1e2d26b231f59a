#include "doctest.h"

#include "json.hpp"
#include "roughlyap/greedy.hpp"
#include "support.hpp"

using namespace roughlyap;
using testsupport::Gen;

TEST_SUITE("greedy") {

TEST_CASE("greedy pieces stay under the threshold and are maximal")
{
    Gen gen(41);
    for (int trial = 0; trial < 20; ++trial) {
        const RoughPath rp = gen.fbm(0.4, 2, 256, 1.0 / 256.0);
        GreedyConfig cfg;
        cfg.params = NormParams::for_hurst(0.4);
        cfg.C_g = gen.uniform(0.02, 0.2);
        const GreedyPartition part = greedy_times(rp, 0, 256, cfg);
        REQUIRE(part.nodes.front() == 0);
        REQUIRE(part.nodes.back() == 256);
        for (std::size_t k = 0; k < part.count(); ++k) {
            const std::size_t a = part.nodes[k], b = part.nodes[k + 1];
            CHECK(b > a);
            CHECK(part.norms[k] == doctest::Approx(p_var_norm(rp, a, b, cfg.params)).epsilon(1e-13));
            if (part.degenerate[k]) {
                CHECK(b == a + 1);
                CHECK(part.norms[k] > part.threshold);
                continue;
            }
            CHECK(part.norms[k] <= part.threshold);
            if (b < 256) CHECK(p_var_norm(rp, a, b + 1, cfg.params) > part.threshold);
        }
    }
}

TEST_CASE("count bound holds on sampled paths")
{
    Gen gen(42);
    for (int trial = 0; trial < 20; ++trial) {
        const RoughPath rp = gen.fbm(0.4, 2, 512, 1.0 / 512.0);
        GreedyConfig cfg;
        cfg.params = NormParams::for_hurst(0.4);
        const GreedyPartition part = greedy_times(rp, 0, 512, cfg);
        const CountBound b = count_bound_report(part, rp, 0, 512, cfg);
        CHECK(b.ok);
        CHECK(b.N == part.count());
        CHECK(static_cast<double>(b.N) <= b.bound);
    }
}

TEST_CASE("a quiet path needs one piece")
{
    Gen gen(43);
    RoughPath rp = gen.fbm(0.4, 1, 64, 1.0 / 64.0);
    for (double& v : rp.path.values) v *= 1e-6;
    for (double& v : rp.level2) v *= 1e-12;
    GreedyConfig cfg;
    cfg.params = NormParams::for_hurst(0.4);
    CHECK(greedy_times(rp, 0, 64, cfg).count() == 1);
}

TEST_CASE("threshold and validation")
{
    GreedyConfig cfg;
    cfg.lambda = 0.5;
    cfg.C_p = 4.0;
    cfg.C_g = 0.05;
    CHECK(cfg.threshold() == doctest::Approx(0.5 / 3.2));
    cfg.C_g = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
}

TEST_CASE("partition json carries nodes and flags")
{
    Gen gen(44);
    const RoughPath rp = gen.fbm(0.4, 2, 64, 1.0 / 64.0);
    GreedyConfig cfg;
    cfg.params = NormParams::for_hurst(0.4);
    const GreedyPartition part = greedy_times(rp, 0, 64, cfg);
    const auto j = nlohmann::json::parse(partition_json(part));
    CHECK(j["nodes"].size() == part.nodes.size());
    CHECK(j["norms"].size() == part.count());
    CHECK(j["degenerate_flags"].size() == part.count());
}

}
