#include "roughlyap/lyapnet.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace roughlyap {

namespace {

double ipow(double x, int k)
{
    double r = 1.0;
    for (int i = 0; i < k; ++i) r *= x;
    return r;
}

/// RePU value and first two derivatives at a.
struct Act {
    double phi, d1, d2;
};

Act repu(double a, int s)
{
    if (a <= 0.0) return {0.0, 0.0, 0.0};
    return {ipow(a, s), s * ipow(a, s - 1), s * (s - 1) * ipow(a, s - 2)};
}

double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

double clamp1(double x) { return std::min(1.0, std::max(-1.0, x)); }

} // namespace

std::vector<double> NetParams::flatten() const
{
    std::vector<double> out;
    out.reserve(n_params());
    out.insert(out.end(), W1.begin(), W1.end());
    out.insert(out.end(), b1.begin(), b1.end());
    out.insert(out.end(), W2.begin(), W2.end());
    out.push_back(b2);
    return out;
}

void NetParams::assign(const std::vector<double>& flat)
{
    if (flat.size() != n_params()) throw ParameterError("net: parameter vector has the wrong length");
    auto it = flat.begin();
    W1.assign(it, it + static_cast<long>(h * d));
    it += static_cast<long>(h * d);
    b1.assign(it, it + static_cast<long>(h));
    it += static_cast<long>(h);
    W2.assign(it, it + static_cast<long>(h));
    b2 = flat.back();
}

void NetParams::validate() const
{
    if (d == 0 || h == 0) throw ParameterError("net: d and h must be positive");
    if (W1.size() != h * d || b1.size() != h || W2.size() != h) throw ParameterError("net: weight shapes do not match");
    if (s < 2) throw ParameterError("net: activation power must be >= 2");
    if (!(alpha_bar > 0.0) || !std::isfinite(alpha_bar)) throw ParameterError("net: alpha_bar must be positive");
    for (double v : flatten())
        if (!std::isfinite(v)) throw ParameterError("net: non-finite weight");
}

NetParams init_net(std::size_t d, std::size_t h, double alpha_bar, std::uint64_t seed, int s)
{
    NetParams n;
    n.d = d;
    n.h = h;
    n.s = s;
    n.alpha_bar = alpha_bar;
    std::mt19937_64 rng(derive_seed(seed, 0));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    n.W1.resize(h * d);
    n.b1.resize(h);
    n.W2.resize(h);
    for (auto& w : n.W1) w = u(rng);
    for (auto& w : n.b1) w = u(rng);
    for (auto& w : n.W2) w = u(rng);
    n.b2 = 0.0;
    n.validate();
    return n;
}

NetEval net_eval(const NetParams& net, const double* z)
{
    const std::size_t d = net.d;
    NetEval e;
    e.grad.assign(d, 0.0);
    std::vector<double> gN(d, 0.0);
    double N = net.b2;
    for (std::size_t i = 0; i < net.h; ++i) {
        const double* w = net.W1.data() + i * d;
        double a = net.b1[i];
        for (std::size_t j = 0; j < d; ++j) a += w[j] * z[j];
        const Act act = repu(a, net.s);
        N += net.W2[i] * act.phi;
        for (std::size_t j = 0; j < d; ++j) gN[j] += net.W2[i] * act.d1 * w[j];
    }
    double zz = 0.0;
    for (std::size_t j = 0; j < d; ++j) zz += z[j] * z[j];
    const double zn = std::sqrt(zz), sn = sgn(N);
    e.N = N;
    e.V = std::abs(N) + net.alpha_bar * zn;
    for (std::size_t j = 0; j < d; ++j) e.grad[j] = sn * gN[j] + (zn > 0.0 ? net.alpha_bar * z[j] / zn : 0.0);
    return e;
}

namespace {

/// max |gradV| and max Frobenius norm of the Hessian of N over a grid.
std::pair<double, double> net_bounds(const NetParams& net, const BoxGrid& grid)
{
    const std::size_t d = net.d;
    double g = 0.0, hs = 0.0;
    std::vector<double> z(d), H(d * d);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        grid.point(k, z.data());
        const NetEval e = net_eval(net, z.data());
        double gg = 0.0;
        for (double v : e.grad) gg += v * v;
        g = std::max(g, std::sqrt(gg));
        std::fill(H.begin(), H.end(), 0.0);
        for (std::size_t i = 0; i < net.h; ++i) {
            const double* w = net.W1.data() + i * d;
            double a = net.b1[i];
            for (std::size_t j = 0; j < d; ++j) a += w[j] * z[j];
            const double c = net.W2[i] * repu(a, net.s).d2;
            if (c == 0.0) continue;
            for (std::size_t r = 0; r < d; ++r)
                for (std::size_t q = 0; q < d; ++q) H[r * d + q] += c * w[r] * w[q];
        }
        double hh = 0.0;
        for (double v : H) hh += v * v;
        hs = std::max(hs, std::sqrt(hh));
    }
    return {g, hs};
}

} // namespace

LyapunovFn net_lyapunov(const NetParams& net, const Box& box, std::size_t res)
{
    net.validate();
    box.validate();
    if (box.dim() != net.d) throw ParameterError("net_lyapunov: box dimension does not match the net");
    LyapunovFn L;
    L.name = "lyapnet";
    L.dim = net.d;
    L.V = [net](const double* z) { return net_eval(net, z).V; };
    L.gradV = [net](const double* z, double* out) {
        const NetEval e = net_eval(net, z);
        std::copy(e.grad.begin(), e.grad.end(), out);
    };
    L.L_V = net_bounds(net, BoxGrid{box, res}).first;
    const double ab = net.alpha_bar;
    L.alpha.tag = "poly";
    L.alpha.C = ab;
    L.alpha.rho = 1.0;
    L.alpha.fn = [ab](double r) { return ab * r; };
    L.alpha.inv = [ab](double s) { return s / ab; };
    // |N(z)| <= |b2| + sum |W2_i| (|W1_i| r + |b1_i|)^s
    double w1max = 0.0;
    for (std::size_t i = 0; i < net.h; ++i) {
        double n2 = 0.0;
        for (std::size_t j = 0; j < net.d; ++j) n2 += net.W1[i * net.d + j] * net.W1[i * net.d + j];
        w1max = std::max(w1max, std::sqrt(n2));
    }
    double w2sum = 0.0, b1max = 0.0;
    for (std::size_t i = 0; i < net.h; ++i) {
        w2sum += std::abs(net.W2[i]);
        b1max = std::max(b1max, std::abs(net.b1[i]));
    }
    const double b2 = std::abs(net.b2);
    const int s = net.s;
    L.beta.tag = "poly";
    L.beta.C = b2 + w2sum * std::pow(std::max(w1max, b1max), s) * std::pow(2.0, s) + ab;
    L.beta.rho = s;
    L.beta.fn = [=](double r) { return b2 + w2sum * ipow(w1max * r + b1max, s) + ab * r; };
    return L;
}

std::size_t covering_count(const Box& domain, double eps0)
{
    domain.validate();
    if (!(eps0 > 0.0)) throw ParameterError("covering: eps0 must be positive");
    const double side = 2.0 * eps0 / std::sqrt(static_cast<double>(domain.dim()));
    std::size_t M = 1;
    for (std::size_t i = 0; i < domain.dim(); ++i)
        M *= static_cast<std::size_t>(std::max(1.0, std::ceil((domain.hi[i] - domain.lo[i]) / side - 1e-12)));
    return M;
}

std::vector<double> covering_centers(const Box& domain, double eps0)
{
    domain.validate();
    if (!(eps0 > 0.0)) throw ParameterError("covering: eps0 must be positive");
    const std::size_t d = domain.dim();
    const double side = 2.0 * eps0 / std::sqrt(static_cast<double>(d));
    std::vector<std::size_t> n(d);
    std::size_t M = 1;
    for (std::size_t i = 0; i < d; ++i) {
        n[i] = static_cast<std::size_t>(std::max(1.0, std::ceil((domain.hi[i] - domain.lo[i]) / side - 1e-12)));
        M *= n[i];
    }
    std::vector<double> out(M * d);
    for (std::size_t k = 0; k < M; ++k) {
        std::size_t r = k;
        for (std::size_t ii = d; ii-- > 0;) {
            const std::size_t idx = r % n[ii];
            r /= n[ii];
            const double w = (domain.hi[ii] - domain.lo[ii]) / static_cast<double>(n[ii]);
            out[k * d + ii] = domain.lo[ii] + (static_cast<double>(idx) + 0.5) * w;
        }
    }
    return out;
}

double corner_ball_fraction(const Box& domain, double eps0)
{
    domain.validate();
    if (!(eps0 > 0.0)) throw ParameterError("covering: eps0 must be positive");
    const double d = static_cast<double>(domain.dim());
    const double ball = std::pow(M_PI, d / 2.0) / std::tgamma(d / 2.0 + 1.0) * std::pow(eps0, d);
    return std::min(1.0, ball * std::pow(2.0, -d) / domain.volume());
}

std::size_t sample_size(const Box& domain, double eps0, double rho, double p_min)
{
    if (!(eps0 > 0.0 && eps0 < 1.0)) throw ParameterError("sample_size: eps0 must lie in (0, 1)");
    if (!(rho > 0.0 && rho < 1.0)) throw ParameterError("sample_size: rho must lie in (0, 1)");
    if (!(p_min > 0.0 && p_min < 1.0)) throw ParameterError("sample_size: p_min must lie in (0, 1)");
    const double M = static_cast<double>(covering_count(domain, eps0));
    const double m = std::ceil(std::log(M / rho) / (-std::log1p(-p_min)));
    return static_cast<std::size_t>(std::max(1.0, m));
}

std::size_t SamplePlan::resolved_m_z() const
{
    return m_z ? m_z : sample_size(domain, eps0, rho, corner_ball_fraction(domain, eps0));
}

void SamplePlan::validate() const
{
    domain.validate();
    if (!(eps0 > 0.0 && eps0 < 1.0)) throw ParameterError("sample plan: eps0 must lie in (0, 1)");
    if (!(rho > 0.0 && rho < 1.0)) throw ParameterError("sample plan: rho must lie in (0, 1)");
    if (m_psi == 0 || m_eta == 0) throw ParameterError("sample plan: perturbation counts must be positive");
}

void TrainConfig::validate() const
{
    if (!(delta_bar > 0.0 && delta_bar < 1.0)) throw ParameterError("train: delta_bar must lie in (0, 1)");
    if (!(C_bar > 0.0)) throw ParameterError("train: C_bar must be positive");
    if (!(lambda >= 0.0 && lambda < 1.0)) throw ParameterError("train: lambda must lie in [0, 1)");
    if (!(learning_rate > 0.0) || !(min_learning_rate > 0.0) || !(lr_growth >= 1.0) || patience == 0)
        throw ParameterError("train: invalid learning-rate settings");
    if (!(tolerance >= 0.0)) throw ParameterError("train: tolerance must be >= 0");
}

RiskData build_risk_data(const DriftField& f, const SamplePlan& plan, double lambda)
{
    plan.validate();
    const std::size_t d = plan.domain.dim();
    if (f.dim != d) throw ParameterError("risk data: drift dimension does not match the domain");
    RiskData r;
    r.d = d;
    r.sampler = PerturbationSampler(d, lambda, plan.m_psi, plan.m_eta, derive_seed(plan.seed, 1));
    const std::size_t m = plan.resolved_m_z(), ne = r.sampler.n_eta();
    std::mt19937_64 rng(derive_seed(plan.seed, 0));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    r.z.resize(m * d);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t a = 0; a < d; ++a)
            r.z[i * d + a] = plan.domain.lo[a] + u(rng) * (plan.domain.hi[a] - plan.domain.lo[a]);
    r.fvals.resize(m * ne * d);
    r.flagged.assign(m, 0);
    std::vector<double> zp(d);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t k = 0; k < ne; ++k) {
            const double* eta = r.sampler.eta(k);
            for (std::size_t a = 0; a < d; ++a) zp[a] = r.z[i * d + a] + eta[a];
            double* out = r.fvals.data() + (i * ne + k) * d;
            f.f(zp.data(), out);
            for (std::size_t a = 0; a < d; ++a)
                if (!std::isfinite(out[a])) r.flagged[i] = 1;
        }
    for (auto v : r.flagged) r.n_flagged += v;
    return r;
}

RiskResult empirical_risk(const NetParams& net, const RiskData& data, const TrainConfig& cfg, bool want_grad,
                          Exec exec)
{
    if (net.d != data.d) throw ParameterError("empirical_risk: net and data dimensions differ");
    const std::size_t d = net.d, h = net.h, m = data.size(), P = net.n_params();
    const std::size_t np = data.sampler.n_psi(), ne = data.sampler.n_eta();
    const std::size_t valid = m - data.n_flagged;
    RiskResult res;
    res.margins.assign(m, std::numeric_limits<double>::quiet_NaN());
    if (valid == 0) throw ComputationError("empirical_risk: every sample is flagged");

    // fixed chunking keeps the floating-point reduction independent of the thread count
    const std::size_t chunks = std::min<std::size_t>(64, m);
    std::vector<double> loss_part(chunks, 0.0);
    std::vector<double> grad_part(want_grad ? chunks * P : 0, 0.0);
    const long nc = static_cast<long>(chunks);
#pragma omp parallel for schedule(dynamic) if (exec == Exec::Parallel)
    for (long c = 0; c < nc; ++c) {
        const std::size_t lo = m * static_cast<std::size_t>(c) / chunks;
        const std::size_t hi = m * (static_cast<std::size_t>(c) + 1) / chunks;
        std::vector<Act> act(h);
        std::vector<double> gN(d), grad(d), pg(np * d), u(d);
        double* gp = want_grad ? grad_part.data() + static_cast<std::size_t>(c) * P : nullptr;
        for (std::size_t i = lo; i < hi; ++i) {
            if (data.flagged[i]) continue;
            const double* z = data.z.data() + i * d;
            double N = net.b2;
            std::fill(gN.begin(), gN.end(), 0.0);
            for (std::size_t q = 0; q < h; ++q) {
                const double* w = net.W1.data() + q * d;
                double a = net.b1[q];
                for (std::size_t j = 0; j < d; ++j) a += w[j] * z[j];
                act[q] = repu(a, net.s);
                N += net.W2[q] * act[q].phi;
                for (std::size_t j = 0; j < d; ++j) gN[j] += net.W2[q] * act[q].d1 * w[j];
            }
            double zz = 0.0;
            for (std::size_t j = 0; j < d; ++j) zz += z[j] * z[j];
            const double zn = std::sqrt(zz), sn = sgn(N);
            const double V = std::abs(N) + net.alpha_bar * zn;
            for (std::size_t j = 0; j < d; ++j) grad[j] = sn * gN[j] + (zn > 0.0 ? net.alpha_bar * z[j] / zn : 0.0);
            for (std::size_t jp = 0; jp < np; ++jp) {
                const double* psi = data.sampler.psi(jp);
                for (std::size_t b = 0; b < d; ++b) {
                    double acc = 0.0;
                    for (std::size_t a = 0; a < d; ++a) acc += grad[a] * psi[a * d + b];
                    pg[jp * d + b] = acc;
                }
            }
            double best = -std::numeric_limits<double>::infinity();
            std::size_t bj = 0, bk = 0;
            for (std::size_t k = 0; k < ne; ++k) {
                const double* fk = data.fvals.data() + (i * ne + k) * d;
                double base = 0.0;
                for (std::size_t a = 0; a < d; ++a) base += grad[a] * fk[a];
                for (std::size_t jp = 0; jp < np; ++jp) {
                    double v = base;
                    for (std::size_t b = 0; b < d; ++b) v += pg[jp * d + b] * fk[b];
                    if (v > best) {
                        best = v;
                        bj = jp;
                        bk = k;
                    }
                }
            }
            const double br = best + cfg.delta_bar * V - cfg.C_bar;
            res.margins[i] = br;
            if (!(br > 0.0)) continue;
            loss_part[static_cast<std::size_t>(c)] += br * br;
            if (!gp || sn == 0.0) continue;
            // u = (I + psi) f at the active sample
            const double* fk = data.fvals.data() + (i * ne + bk) * d;
            const double* psi = data.sampler.psi(bj);
            for (std::size_t a = 0; a < d; ++a) {
                double acc = fk[a];
                for (std::size_t b = 0; b < d; ++b) acc += psi[a * d + b] * fk[b];
                u[a] = acc;
            }
            const double scale = 2.0 * br * sn;
            const double db = cfg.delta_bar;
            double* gW1 = gp;
            double* gb1 = gp + h * d;
            double* gW2 = gb1 + h;
            for (std::size_t q = 0; q < h; ++q) {
                const double* w = net.W1.data() + q * d;
                double wu = 0.0;
                for (std::size_t j = 0; j < d; ++j) wu += w[j] * u[j];
                const Act& A = act[q];
                const double W2q = net.W2[q];
                gW2[q] += scale * (A.d1 * wu + db * A.phi);
                gb1[q] += scale * W2q * (A.d2 * wu + db * A.d1);
                for (std::size_t j = 0; j < d; ++j)
                    gW1[q * d + j] += scale * W2q * (A.d2 * z[j] * wu + A.d1 * u[j] + db * A.d1 * z[j]);
            }
            gp[P - 1] += scale * db;
        }
    }
    const double inv = 1.0 / static_cast<double>(valid);
    for (double v : loss_part) res.loss += v;
    res.loss *= inv;
    if (want_grad) {
        res.grad.assign(P, 0.0);
        for (std::size_t c = 0; c < chunks; ++c)
            for (std::size_t p = 0; p < P; ++p) res.grad[p] += grad_part[c * P + p];
        for (auto& g : res.grad) g *= inv;
    }
    if (!std::isfinite(res.loss)) throw ComputationError("empirical_risk: non-finite loss");
    return res;
}

TrainResult train(const NetParams& init, const RiskData& data, const TrainConfig& cfg, Exec exec)
{
    cfg.validate();
    init.validate();
    TrainResult tr;
    tr.theta = init;
    std::vector<double> theta = init.flatten();
    for (auto& v : theta) v = clamp1(v);
    tr.theta.assign(theta);
    RiskResult cur = empirical_risk(tr.theta, data, cfg, true, exec);
    tr.loss_history.push_back(cur.loss);
    if (cur.loss <= cfg.tolerance) {
        tr.converged = true;
        return tr;
    }
    // Projected steps are always taken so the iterate can cross kinks of the risk; the best
    // iterate is kept and the rate is halved after `patience` steps without progress.
    double lr = cfg.learning_rate;
    NetParams trial = tr.theta;
    RiskResult best = cur;
    std::vector<double> next(theta.size());
    std::size_t stale = 0;
    for (std::size_t it = 1; it <= cfg.max_iterations; ++it) {
        tr.iterations = it;
        for (std::size_t p = 0; p < theta.size(); ++p) next[p] = clamp1(theta[p] - lr * cur.grad[p]);
        trial.assign(next);
        RiskResult cand = empirical_risk(trial, data, cfg, true, exec);
        if (!std::isfinite(cand.loss)) cand.loss = std::numeric_limits<double>::infinity();
        if (cand.loss < best.loss) {
            best = cand;
            tr.theta = trial;
            tr.loss_history.push_back(best.loss);
            lr *= cfg.lr_growth;
            stale = 0;
            if (best.loss <= cfg.tolerance) {
                tr.converged = true;
                break;
            }
        } else if (++stale >= cfg.patience) {
            lr *= 0.5;
            stale = 0;
            if (lr < cfg.min_learning_rate) {
                tr.aborted = true;
                tr.diagnostics = "learning rate fell below " + std::to_string(cfg.min_learning_rate) +
                                 " at iteration " + std::to_string(it) + " with loss " + std::to_string(best.loss);
                break;
            }
        }
        if (std::isfinite(cand.loss)) {
            theta = next;
            cur = std::move(cand);
        }
    }
    cur = best;
    if (!tr.converged && !tr.aborted)
        tr.diagnostics = "iteration budget exhausted with loss " + std::to_string(cur.loss);
    return tr;
}

AccuracyReport verify_accuracy(const NetParams& net, const DriftField& f, const BoxGrid& grid, const TrainConfig& cfg,
                               double eps, const PerturbationSampler& sampler, Exec exec)
{
    net.validate();
    grid.box.validate();
    if (grid.box.dim() != net.d || f.dim != net.d || sampler.dim() != net.d)
        throw ParameterError("verify_accuracy: dimension mismatch");
    if (!(eps >= 0.0)) throw ParameterError("verify_accuracy: eps must be >= 0");
    const std::size_t n = grid.size(), d = net.d;
    std::vector<double> margin(n), fmax(n), dfmax(n);
    const long nl = static_cast<long>(n);
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
    for (long k = 0; k < nl; ++k) {
        std::vector<double> z(d), fz(d), J(d * d);
        grid.point(static_cast<std::size_t>(k), z.data());
        const NetEval e = net_eval(net, z.data());
        const double sup = perturbed_sup(e.grad.data(), f, z.data(), sampler);
        margin[static_cast<std::size_t>(k)] = 2.0 * eps - (sup + cfg.delta_bar * e.V - cfg.C_bar);
        f.f(z.data(), fz.data());
        f.Df(z.data(), J.data());
        double a = 0.0, b = 0.0;
        for (double v : fz) a += v * v;
        for (double v : J) b += v * v;
        fmax[static_cast<std::size_t>(k)] = std::sqrt(a);
        dfmax[static_cast<std::size_t>(k)] = std::sqrt(b);
    }
    AccuracyReport r;
    r.points = n;
    r.passed.assign(n, 0);
    r.worst_margin = std::numeric_limits<double>::infinity();
    std::size_t worst = 0;
    double F = 0.0, DF = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (std::isnan(margin[k])) {
            ++r.flagged;
            continue;
        }
        if (std::isfinite(fmax[k])) F = std::max(F, fmax[k]);
        if (std::isfinite(dfmax[k])) DF = std::max(DF, dfmax[k]);
        if (margin[k] >= 0.0)
            r.passed[k] = 1;
        else
            ++r.failures;
        if (margin[k] < r.worst_margin) {
            r.worst_margin = margin[k];
            worst = k;
        }
    }
    const std::size_t checked = n - r.flagged;
    r.pass_rate = checked ? static_cast<double>(checked - r.failures) / static_cast<double>(checked) : 0.0;
    if (checked) {
        r.worst_point.resize(d);
        grid.point(worst, r.worst_point.data());
    } else {
        r.worst_margin = std::numeric_limits<double>::quiet_NaN();
    }
    const auto [g, hs] = net_bounds(net, grid);
    r.lipschitz_net = g + hs;
    r.lipschitz_aggregate = r.lipschitz_net * (1.0 + cfg.lambda) * (F + DF);
    double sum = 0.0;
    std::size_t cnt = 0;
    r.min_certified_radius = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
        if (!r.passed[k]) continue;
        const double rad = r.lipschitz_aggregate > 0.0 ? margin[k] / r.lipschitz_aggregate
                                                       : std::numeric_limits<double>::infinity();
        r.min_certified_radius = std::min(r.min_certified_radius, rad);
        sum += rad;
        ++cnt;
    }
    r.mean_certified_radius = cnt ? sum / static_cast<double>(cnt) : 0.0;
    if (!cnt) r.min_certified_radius = 0.0;
    return r;
}

std::string checkpoint_json(const NetParams& net, const TrainConfig& cfg, const TrainResult& tr)
{
    nlohmann::ordered_json j;
    j["dims"] = {{"d", net.d}, {"h", net.h}};
    j["s"] = net.s;
    j["alpha_bar"] = net.alpha_bar;
    nlohmann::json w1 = nlohmann::json::array();
    for (std::size_t i = 0; i < net.h; ++i)
        w1.push_back(std::vector<double>(net.W1.begin() + static_cast<long>(i * net.d),
                                         net.W1.begin() + static_cast<long>((i + 1) * net.d)));
    j["W1"] = w1;
    j["b1"] = net.b1;
    j["W2"] = net.W2;
    j["b2"] = net.b2;
    j["train_config"] = {{"delta_bar", cfg.delta_bar},          {"C_bar", cfg.C_bar},
                         {"lambda", cfg.lambda},                {"learning_rate", cfg.learning_rate},
                         {"max_iterations", cfg.max_iterations}, {"tolerance", cfg.tolerance},
                         {"patience", cfg.patience}};
    j["loss_history"] = tr.loss_history;
    j["iterations"] = tr.iterations;
    j["converged"] = tr.converged;
    j["aborted"] = tr.aborted;
    return j.dump(2);
}

NetParams net_from_json(const std::string& text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
        NetParams n;
        n.d = j.at("dims").at("d").get<std::size_t>();
        n.h = j.at("dims").at("h").get<std::size_t>();
        n.s = j.at("s").get<int>();
        n.alpha_bar = j.at("alpha_bar").get<double>();
        n.W1.clear();
        for (const auto& row : j.at("W1")) {
            const auto r = row.get<std::vector<double>>();
            if (r.size() != n.d) throw ParameterError("checkpoint: W1 row has the wrong length");
            n.W1.insert(n.W1.end(), r.begin(), r.end());
        }
        n.b1 = j.at("b1").get<std::vector<double>>();
        n.W2 = j.at("W2").get<std::vector<double>>();
        n.b2 = j.at("b2").get<double>();
        n.validate();
        return n;
    } catch (const nlohmann::json::exception& e) {
        throw ParameterError(std::string("checkpoint: ") + e.what());
    }
}

std::string accuracy_json(const AccuracyReport& r, const BoxGrid& grid, const TrainConfig& cfg, double eps)
{
    auto num = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
    nlohmann::ordered_json j;
    j["domain"] = {{"lo", grid.box.lo}, {"hi", grid.box.hi}};
    j["resolution"] = grid.res;
    j["eps"] = eps;
    j["delta_bar"] = cfg.delta_bar;
    j["C_bar"] = cfg.C_bar;
    j["lambda"] = cfg.lambda;
    j["points"] = r.points;
    j["failures"] = r.failures;
    j["flagged"] = r.flagged;
    j["pass_rate"] = r.pass_rate;
    j["worst_margin"] = num(r.worst_margin);
    j["worst_point"] = r.worst_point;
    j["lipschitz_net"] = r.lipschitz_net;
    j["lipschitz_aggregate"] = r.lipschitz_aggregate;
    j["min_certified_radius"] = num(r.min_certified_radius);
    j["mean_certified_radius"] = r.mean_certified_radius;
    return j.dump(2);
}

} // namespace roughlyap
