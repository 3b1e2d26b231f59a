#include "doctest.h"

#include "roughlyap/lyapunov.hpp"
#include "support.hpp"

using namespace roughlyap;
using testsupport::Gen;

namespace {

void check_gradient(const LyapunovFn& V, Gen& gen, double half)
{
    std::vector<double> z(V.dim), g(V.dim);
    for (int trial = 0; trial < 100; ++trial) {
        for (auto& v : z) v = gen.uniform(-half, half);
        V.gradV(z.data(), g.data());
        const auto fd = testsupport::fd_gradient([&](const std::vector<double>& x) { return V.V(x.data()); }, z, 1e-6);
        for (std::size_t k = 0; k < V.dim; ++k) CHECK(g[k] == doctest::Approx(fd[k]).epsilon(1e-6).scale(1.0));
    }
}

} // namespace

TEST_SUITE("lyapunov") {

TEST_CASE("lyapunov gradients match finite differences")
{
    Gen gen(61);
    check_gradient(fhn_lyapunov(0.08, 0.8, 2.0, 3.0).V, gen, 3.0);
    check_gradient(pendulum_lyapunov(1.0, 0.5), gen, 6.0);
    check_gradient(sqrt_quadratic_lyapunov(3), gen, 5.0);
}

TEST_CASE("gradient bounds dominate sampled gradients")
{
    Gen gen(62);
    for (const LyapunovFn& V :
         {fhn_lyapunov(0.08, 0.8, 2.0, 3.0).V, pendulum_lyapunov(1.0, 0.5), sqrt_quadratic_lyapunov(2)}) {
        double g[2];
        for (int k = 0; k < 5000; ++k) {
            const double z[2] = {gen.uniform(-20.0, 20.0), gen.uniform(-20.0, 20.0)};
            V.gradV(z, g);
            CHECK(std::hypot(g[0], g[1]) <= V.L_V + 1e-12);
        }
    }
}

TEST_CASE("fhn lyapunov lies between its comparison functions")
{
    Gen gen(63);
    const LyapunovFn V = fhn_lyapunov(0.08, 0.8, 2.0, 3.0).V;
    for (int k = 0; k < 5000; ++k) {
        const double z[2] = {gen.uniform(-10.0, 10.0), gen.uniform(-10.0, 10.0)};
        const double r = std::hypot(z[0], z[1]);
        CHECK(V.alpha(r) <= V.V(z) + 1e-12);
        CHECK(V.V(z) <= V.beta(r) + 1e-12);
        if (V.alpha.inv) CHECK(V.alpha.inv(V.alpha(r)) == doctest::Approx(r).epsilon(1e-9));
    }
}

TEST_CASE("fhn closed-form constants")
{
    const FhnLyapunov f = fhn_lyapunov(0.08, 0.8, 2.0, 3.0);
    const double em = 0.08 * 0.8;
    CHECK(f.B == doctest::Approx(6.0 / em));
    CHECK(f.cert.delta == doctest::Approx(em / (12.0 * (2.0 + em))));
    CHECK(f.cert.lambda == doctest::Approx(1.0 / 24.0));
    CHECK(f.cert.C_lambda == 3.0);
}

TEST_CASE("classical pendulum constants hold pointwise")
{
    Gen gen(64);
    const SystemSpec s = make_pendulum(1.0, 0.5);
    const LyapunovFn V = pendulum_lyapunov(1.0, 0.5);
    REQUIRE(V.classical);
    double g[2], f[2];
    for (int k = 0; k < 5000; ++k) {
        const double z[2] = {gen.uniform(-20.0, 20.0), gen.uniform(-20.0, 20.0)};
        V.gradV(z, g);
        s.drift.f(z, f);
        CHECK(g[0] * f[0] + g[1] * f[1] <= V.classical->d1 - V.classical->d2 * V.V(z) + 1e-9);
        CHECK(std::hypot(f[0], f[1]) <= pendulum_K(1.0, 0.5) * V.V(z) + 1e-12);
    }
}

TEST_CASE("perturbation sampler respects the radius and includes the origin")
{
    const PerturbationSampler s(2, 0.1, 20, 20, 5);
    CHECK(s.n_psi() == 20);
    CHECK(s.n_eta() == 20);
    bool zero_psi = false, zero_eta = false;
    for (std::size_t j = 0; j < s.n_psi(); ++j) {
        const double* p = s.psi(j);
        const double fro = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2] + p[3] * p[3]);
        CHECK(fro <= 0.1 + 1e-15);
        zero_psi = zero_psi || fro == 0.0;
    }
    for (std::size_t k = 0; k < s.n_eta(); ++k) {
        const double n = std::hypot(s.eta(k)[0], s.eta(k)[1]);
        CHECK(n <= 0.1 + 1e-15);
        zero_eta = zero_eta || n == 0.0;
    }
    CHECK(zero_psi);
    CHECK(zero_eta);
}

TEST_CASE("perturbed sup equals a brute-force maximum")
{
    Gen gen(65);
    const SystemSpec s = make_fhn();
    const PerturbationSampler ps(2, 0.2, 8, 8, 9);
    for (int trial = 0; trial < 20; ++trial) {
        const double z[2] = {gen.uniform(-3.0, 3.0), gen.uniform(-3.0, 3.0)};
        const double g[2] = {gen.normal(), gen.normal()};
        double best = -1e300, f[2];
        for (std::size_t k = 0; k < ps.n_eta(); ++k) {
            const double zp[2] = {z[0] + ps.eta(k)[0], z[1] + ps.eta(k)[1]};
            s.drift.f(zp, f);
            for (std::size_t j = 0; j < ps.n_psi(); ++j) {
                const double* p = ps.psi(j);
                best = std::max(best, g[0] * (f[0] + p[0] * f[0] + p[1] * f[1]) + g[1] * (f[1] + p[2] * f[0] + p[3] * f[1]));
            }
        }
        CHECK(perturbed_sup(g, s.drift, z, ps) == doctest::Approx(best).epsilon(1e-14));
    }
}

TEST_CASE("strong check serial and parallel agree")
{
    const SystemSpec s = make_pendulum();
    const LyapunovFn V = pendulum_lyapunov(1.0, 0.5);
    const StrongCert cert{0.05, 2.0, 0.5, "manual"};
    const BoxGrid grid{Box::cube(2, 6.0), 40};
    const PerturbationSampler ps(2, cert.lambda, 8, 8, 3);
    const auto a = check_strong_condition(V, s.drift, grid, cert, ps, Exec::Serial);
    const auto b = check_strong_condition(V, s.drift, grid, cert, ps, Exec::Parallel);
    CHECK(a.failures == b.failures);
    CHECK(a.worst_margin == b.worst_margin);
    CHECK(a.worst_index == b.worst_index);
}

TEST_CASE("strong check detects a certificate that is too tight")
{
    const SystemSpec s = make_pendulum();
    const LyapunovFn V = pendulum_lyapunov(1.0, 0.5);
    const BoxGrid grid{Box::cube(2, 6.0), 50};
    const PerturbationSampler ps(2, 0.05, 8, 8, 3);
    CHECK_FALSE(check_strong_condition(V, s.drift, grid, StrongCert{0.05, 0.01, 5.0, "manual"}, ps).pass());
}

TEST_CASE("derived certificates: formulas and feasibility")
{
    const CertResult r = derive_cert_lipschitz2(3.0, 1.0, 2.0, 1.5, 2.5, 0.0, 0.1);
    REQUIRE(r.feasible);
    CHECK(r.cert.C_lambda == doctest::Approx(3.0 + 2.0 * 0.1 * (2.5 * 2.0 * 0.1 + 1.5)));
    CHECK(r.cert.delta == doctest::Approx(1.0 - 2.5 * 2.0 * 0.1));
    CHECK_FALSE(derive_cert_lipschitz2(3.0, 1.0, 2.0, 1.5, 2.5, 0.0, 0.5).feasible);
    const double lmax = max_feasible_lambda([](double l) { return derive_cert_lipschitz2(3.0, 1.0, 2.0, 1.5, 2.5, 0.0, l); });
    CHECK(lmax == doctest::Approx(0.2).epsilon(1e-9));

    const CertResult q = derive_cert_lipschitz(1.0, 2.0, 1.0, 1.0, 0.5, 1.0, 0.0, 0.2);
    REQUIRE(q.feasible);
    CHECK(q.cert.C_lambda == doctest::Approx(1.0 + 0.2 * (0.4 + 0.5)));
    CHECK(q.cert.delta == doctest::Approx(2.0 - 0.2));
}

TEST_CASE("derived pendulum certificate passes the grid check")
{
    const SystemSpec s = make_pendulum(1.0, 0.5);
    const LyapunovFn V = pendulum_lyapunov(1.0, 0.5);
    const double K = pendulum_K(1.0, 0.5);
    auto derive = [&](double l) {
        return derive_cert_lipschitz2(V.classical->d1, V.classical->d2, V.L_V, *s.drift.lipschitz, K, 0.0, l);
    };
    const CertResult r = derive(0.5 * max_feasible_lambda(derive));
    REQUIRE(r.feasible);
    const PerturbationSampler ps(2, r.cert.lambda, 16, 16, 4);
    CHECK(check_strong_condition(V, s.drift, BoxGrid{Box::cube(2, 6.0), 60}, r.cert, ps).pass());
}

TEST_CASE("decay envelope closed form")
{
    const StrongCert c{0.1, 2.0, 0.5, "manual"};
    CHECK(decay_envelope(10.0, c, 0.0, 0.0, 1.0, 4.0, 0.05, 2.5) == doctest::Approx(10.0));
    CHECK(decay_envelope(10.0, c, 1e6, 0.0, 1.0, 4.0, 0.05, 2.5) == doctest::Approx(4.0));
    const double xi = 0.7, k = 16.0 * 4.0 * 0.05;
    const double H = std::pow(k, 2.5) * std::pow(0.1, -1.5) * std::pow(xi, 2.5) + 8.0 * 4.0 * 0.05 * xi;
    CHECK(h_term(xi, c, 1.0, 4.0, 0.05, 2.5) == doctest::Approx(H));
    CHECK(h_term(xi, c, 1.0, 4.0, 0.0, 2.5) == 0.0);
}

TEST_CASE("absorbing radius sums the truncated series")
{
    Gen gen(66);
    const RoughPath rp = gen.fbm(0.4, 2, 8 * 64, 1.0 / 64.0, -7.0);
    const NormParams np = NormParams::for_hurst(0.4);
    const StrongCert c{0.1, 2.0, 0.5, "manual"};
    const KBound alpha{"poly", 1.0, 1.0, [](double r) { return r; }, [](double s) { return s; }};
    const AbsorbingRadius a = absorbing_radius(rp, c, 1.0, 4.0, 0.05, 5, np, alpha, 1e-3, 0.0);
    double sum = 0.0;
    for (int k = 0; k <= 5; ++k) {
        const std::size_t hi = rp.grid().index_of(-k), lo = rp.grid().index_of(-k - 1.0);
        sum += std::exp(-k * 0.5) * h_term(p_var_norm(rp, lo, hi, np), c, 1.0, 4.0, 0.05, np.p);
    }
    CHECK(a.R_bar == doctest::Approx(sum).epsilon(1e-14));
    CHECK(a.radius == doctest::Approx(4.0 + sum + 1e-3));
    CHECK_THROWS_AS(absorbing_radius(rp, c, 1.0, 4.0, 0.05, 7, np, alpha), ParameterError);
}

}
