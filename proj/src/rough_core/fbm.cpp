#include "roughlyap/rough_core.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <random>

namespace roughlyap {

namespace {

double fgn_autocov(std::size_t k, double hurst)
{
    const double h2 = 2.0 * hurst;
    const double kk = static_cast<double>(k);
    return 0.5 * (std::pow(kk + 1.0, h2) - 2.0 * std::pow(kk, h2) + std::pow(std::abs(kk - 1.0), h2));
}

/// Unit-step fractional Gaussian noise of length n, either via circulant
/// embedding (Davies-Harte / Wood-Chan) or a dense Cholesky factor.
class FgnSampler {
public:
    FgnSampler(std::size_t n, double hurst, FbmMethod method) : n_(n), hurst_(hurst)
    {
        if (method != FbmMethod::Cholesky && build_circulant()) {
            method_ = FbmMethod::Circulant;
            return;
        }
        if (method == FbmMethod::Circulant)
            throw ComputationError("circulant embedding is not positive semidefinite");
        build_cholesky();
        method_ = FbmMethod::Cholesky;
    }

    FbmMethod method() const { return method_; }

    void sample(std::mt19937_64& rng, double* out)
    {
        std::normal_distribution<double> normal(0.0, 1.0);
        if (method_ == FbmMethod::Cholesky) {
            Eigen::VectorXd xi(n_);
            for (std::size_t i = 0; i < n_; ++i) xi[i] = normal(rng);
            Eigen::VectorXd y = chol_ * xi;
            for (std::size_t i = 0; i < n_; ++i) out[i] = y[i];
            return;
        }
        const std::size_t m = sqrt_eig_.size();
        const std::size_t half = m / 2;
        w_.assign(m, {0.0, 0.0});
        w_[0] = sqrt_eig_[0] * normal(rng);
        w_[half] = sqrt_eig_[half] * normal(rng);
        for (std::size_t k = 1; k < half; ++k) {
            const double a = normal(rng);
            const double b = normal(rng);
            const double s = sqrt_eig_[k] * M_SQRT1_2;
            w_[k] = {s * a, s * b};
            w_[m - k] = std::conj(w_[k]);
        }
        fft_.fwd(x_, w_);
        for (std::size_t i = 0; i < n_; ++i) out[i] = x_[i].real();
    }

private:
    bool build_circulant()
    {
        std::size_t half = 1;
        while (half < n_) half <<= 1;
        const std::size_t m = 2 * half;
        std::vector<std::complex<double>> c(m), lam;
        for (std::size_t j = 0; j <= half; ++j) c[j] = fgn_autocov(j, hurst_);
        for (std::size_t j = 1; j < half; ++j) c[m - j] = c[j];
        fft_.fwd(lam, c);
        double max_eig = 0.0;
        for (auto& l : lam) max_eig = std::max(max_eig, l.real());
        sqrt_eig_.resize(m);
        for (std::size_t k = 0; k < m; ++k) {
            double l = lam[k].real();
            if (l < -1e-10 * max_eig) return false;
            sqrt_eig_[k] = std::sqrt(std::max(l, 0.0) / static_cast<double>(m));
        }
        return true;
    }

    void build_cholesky()
    {
        Eigen::MatrixXd cov(n_, n_);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j) cov(i, j) = fgn_autocov(i > j ? i - j : j - i, hurst_);
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success) throw ComputationError("fGn covariance Cholesky failed");
        chol_ = llt.matrixL();
    }

    std::size_t n_;
    double hurst_;
    FbmMethod method_ = FbmMethod::Circulant;
    std::vector<double> sqrt_eig_;
    Eigen::MatrixXd chol_;
    Eigen::FFT<double> fft_;
    std::vector<std::complex<double>> w_, x_;
};

void check_hurst(double h)
{
    if (!(h > 1.0 / 3.0 && h <= 0.5)) throw ParameterError("hurst must lie in (1/3, 1/2]");
}

PathSample draw(FgnSampler& sampler, const FbmConfig& cfg, std::uint64_t seed)
{
    const std::size_t n = cfg.grid.n_steps, m = cfg.dims;
    const double scale = std::pow(cfg.grid.dt, cfg.hurst);
    PathSample out;
    out.grid = cfg.grid;
    out.dims = m;
    out.values.assign((n + 1) * m, 0.0);
    std::vector<double> inc(n);
    for (std::size_t c = 0; c < m; ++c) {
        std::mt19937_64 rng(derive_seed(seed, c));
        sampler.sample(rng, inc.data());
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            acc += scale * inc[k];
            out.values[(k + 1) * m + c] = acc;
        }
    }
    if (cfg.grid.has_node(0.0) && cfg.grid.index_of(0.0) != 0) {
        const std::size_t k0 = cfg.grid.index_of(0.0);
        std::vector<double> base(out.node(k0), out.node(k0) + m);
        for (std::size_t k = 0; k <= n; ++k)
            for (std::size_t c = 0; c < m; ++c) out.values[k * m + c] -= base[c];
    }
    out.meta.generator = "fbm";
    out.meta.hurst = cfg.hurst;
    out.meta.seed = seed;
    out.meta.method = sampler.method() == FbmMethod::Cholesky ? "cholesky" : "circulant";
    return out;
}

} // namespace

PathSample generate_fbm(const FbmConfig& cfg)
{
    check_hurst(cfg.hurst);
    cfg.grid.validate();
    if (cfg.dims < 1) throw ParameterError("fbm: dims must be >= 1");
    FgnSampler sampler(cfg.grid.n_steps, cfg.hurst, cfg.method);
    return draw(sampler, cfg, cfg.seed);
}

std::vector<ScalingRow> fbm_variance_scaling(const FbmConfig& base, std::size_t samples, Exec exec)
{
    check_hurst(base.hurst);
    base.grid.validate();
    if (samples < 2) throw ParameterError("variance scaling needs at least two samples");
    std::vector<std::size_t> lags;
    for (std::size_t l = 1; l <= base.grid.n_steps; l *= 2) lags.push_back(l);
    const std::size_t k0 = base.grid.has_node(0.0) ? base.grid.index_of(0.0) : 0;
    if (k0 + lags.back() > base.grid.n_steps) throw ParameterError("variance scaling: window too short after origin");

    std::vector<double> table(samples * lags.size());
    const long ns = static_cast<long>(samples);
#pragma omp parallel if (exec == Exec::Parallel)
    {
        FgnSampler sampler(base.grid.n_steps, base.hurst, base.method);
#pragma omp for schedule(static)
        for (long s = 0; s < ns; ++s) {
            PathSample p = draw(sampler, base, derive_seed(base.seed, static_cast<std::uint64_t>(s)));
            for (std::size_t r = 0; r < lags.size(); ++r) {
                double sq = 0.0;
                for (std::size_t c = 0; c < p.dims; ++c) {
                    const double d = p.node(k0 + lags[r])[c] - p.node(k0)[c];
                    sq += d * d;
                }
                table[static_cast<std::size_t>(s) * lags.size() + r] = sq / static_cast<double>(p.dims);
            }
        }
    }
    std::vector<ScalingRow> rows(lags.size());
    for (std::size_t r = 0; r < lags.size(); ++r) {
        double acc = 0.0;
        for (std::size_t s = 0; s < samples; ++s) acc += table[s * lags.size() + r];
        rows[r].lag = base.grid.dt * static_cast<double>(lags[r]);
        rows[r].mean_sq = acc / static_cast<double>(samples);
    }
    return rows;
}

double loglog_slope(const std::vector<ScalingRow>& rows)
{
    if (rows.size() < 2) throw ParameterError("slope needs at least two rows");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(rows.size());
    for (const auto& r : rows) {
        const double x = std::log(r.lag), y = std::log(r.mean_sq);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace roughlyap
