#include "doctest.h"

#include <Eigen/Dense>

#include "roughlyap/models.hpp"
#include "support.hpp"

using namespace roughlyap;
using testsupport::Gen;

namespace {

/// Largest singular value of a 2x2 row-major matrix.
double spectral2(const double* a)
{
    Eigen::Matrix2d m;
    m << a[0], a[1], a[2], a[3];
    return Eigen::JacobiSVD<Eigen::Matrix2d>(m).singularValues()(0);
}

} // namespace

TEST_SUITE("models") {

TEST_CASE("analytic jacobians match finite differences")
{
    Gen gen(51);
    const std::vector<SystemSpec> systems{make_fhn(), make_pendulum(1.3, 0.4),
                                          make_linear_dissipative(0.7, {0.2, -0.1, 0.5})};
    for (const auto& s : systems) {
        const std::size_t d = s.dim();
        std::vector<double> y(d), J(d * d);
        for (int trial = 0; trial < 50; ++trial) {
            for (auto& v : y) v = gen.uniform(-3.0, 3.0);
            s.drift.Df(y.data(), J.data());
            const auto fd = fd_jacobian(s.drift.f, d, y.data());
            for (std::size_t k = 0; k < d * d; ++k) CHECK(J[k] == doctest::Approx(fd[k]).epsilon(1e-6).scale(1.0));
        }
    }
}

TEST_CASE("diffusion derivatives match finite differences and respect C_g")
{
    Gen gen(52);
    for (const std::string kind : {"constant", "linear-bump", "vanishing-at-zero"}) {
        const SystemSpec s = attach_diffusion(make_fhn(), kind, 0.3);
        const auto& g = s.diffusion;
        std::vector<double> y(2), G(4), D(8);
        for (int trial = 0; trial < 50; ++trial) {
            for (auto& v : y) v = gen.uniform(-4.0, 4.0);
            g.g(y.data(), G.data());
            g.Dg(y.data(), D.data());
            for (double v : G) CHECK(std::abs(v) <= 0.3 + 1e-15);
            for (std::size_t k = 0; k < 2; ++k) {
                std::vector<double> yp = y, ym = y, Gp(4), Gm(4);
                yp[k] += 1e-6;
                ym[k] -= 1e-6;
                g.g(yp.data(), Gp.data());
                g.g(ym.data(), Gm.data());
                for (std::size_t ij = 0; ij < 4; ++ij)
                    CHECK(D[ij * 2 + k] == doctest::Approx((Gp[ij] - Gm[ij]) / 2e-6).epsilon(1e-6).scale(1.0));
            }
        }
    }
}

TEST_CASE("vanishing diffusion is zero at the origin")
{
    const SystemSpec s = attach_diffusion(make_pendulum(), "vanishing-at-zero", 0.1);
    CHECK(s.diffusion.zero_at_origin);
    const double y[2] = {0.0, 0.0};
    double G[4];
    s.diffusion.g(y, G);
    for (double v : G) CHECK(v == 0.0);
}

TEST_CASE("zero intensity gives the zero field")
{
    const SystemSpec s = attach_diffusion(make_fhn(), "linear-bump", 0.0);
    CHECK(s.diffusion.is_zero());
    CHECK(s.diffusion.kind == "none");
    CHECK_THROWS_AS(attach_diffusion(make_fhn(), "linear-bump", -1.0), ParameterError);
    CHECK_THROWS_AS(attach_diffusion(make_fhn(), "cubic", 0.1), ParameterError);
}

TEST_CASE("pendulum Lipschitz constant is the sup of the jacobian norm")
{
    const SystemSpec s = make_pendulum(1.2, 0.5);
    double best = 0.0, J[4];
    for (int k = 0; k <= 2000; ++k) {
        const double y[2] = {-M_PI + 2.0 * M_PI * k / 2000.0, 0.0};
        s.drift.Df(y, J);
        best = std::max(best, spectral2(J));
    }
    CHECK(*s.drift.lipschitz == doctest::Approx(best).epsilon(1e-9));
}

TEST_CASE("fhn local Lipschitz bound dominates sampled jacobians")
{
    Gen gen(53);
    const SystemSpec s = make_fhn();
    const Box box{{-2.0, -1.0}, {1.5, 2.0}};
    const double L = s.drift.local_lipschitz(box);
    double J[4];
    for (int k = 0; k < 2000; ++k) {
        const double y[2] = {gen.uniform(-2.0, 1.5), gen.uniform(-1.0, 2.0)};
        s.drift.Df(y, J);
        CHECK(spectral2(J) <= L + 1e-12);
    }
}

TEST_CASE("linear dissipativity inequality")
{
    Gen gen(54);
    const SystemSpec s = make_linear_dissipative(0.8, {0.3, -0.6});
    const Dissipativity dd = *s.drift.dissipativity;
    for (int k = 0; k < 1000; ++k) {
        const std::vector<double> z{gen.uniform(-10.0, 10.0), gen.uniform(-10.0, 10.0)};
        const auto f = s.drift(z);
        CHECK(z[0] * f[0] + z[1] * f[1] <= dd.d1 - dd.d2 * (z[0] * z[0] + z[1] * z[1]) + 1e-12);
    }
}

TEST_CASE("registry")
{
    CHECK(make_system("fhn", {{"epsilon", 0.1}}).params.at("epsilon") == 0.1);
    CHECK(make_system("linear-dissipative", {{"dim", 3}}).dim() == 3);
    CHECK_THROWS_AS(make_system("lorenz", {}), ParameterError);
    CHECK_THROWS_AS(make_system("fhn", {{"epsilom", 0.1}}), ParameterError);
    CHECK_THROWS_AS(make_system("pendulum", {{"mu", -1.0}}), ParameterError);
    CHECK_THROWS_AS(make_system("linear-dissipative", {{"dim", 1.5}}), ParameterError);
}

}
