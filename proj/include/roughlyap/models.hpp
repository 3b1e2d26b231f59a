#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "roughlyap/common.hpp"

namespace roughlyap {

/// y (length d) -> out (length d, or d*d for Jacobians, row-major).
using FieldFn = std::function<void(const double* y, double* out)>;

struct Dissipativity {
    double d1 = 0.0;  // <z, f(z)> <= d1 - d2 |z|^2
    double d2 = 0.0;
};

struct DriftField {
    std::size_t dim = 0;
    FieldFn f;
    FieldFn Df;                              // optional
    std::optional<double> lipschitz;         // global C_f
    double f0_norm = 0.0;
    std::optional<Dissipativity> dissipativity;
    std::function<double(const Box&)> local_lipschitz;  // optional

    std::vector<double> operator()(const std::vector<double>& y) const;
};

/// g(y) is d x m (row-major); Dg(y)[(i*m + j)*d + k] = d g_ij / d y_k.
struct DiffusionField {
    std::size_t d = 0;
    std::size_t m = 0;
    std::string kind = "none";
    double C_g = 0.0;
    bool zero_at_origin = true;
    FieldFn g;
    FieldFn Dg;

    bool is_zero() const { return kind == "none" || C_g == 0.0; }
};

struct SystemSpec {
    std::string name;
    std::map<std::string, double> params;
    DriftField drift;
    DiffusionField diffusion;

    std::size_t dim() const { return drift.dim; }
    std::size_t noise_dims() const { return diffusion.m; }
};

/// f(v,w) = (v - v^3/3 - w + I, eps (v - mu w + J)).
SystemSpec make_fhn(double epsilon = 0.08, double mu = 0.8, double I = 0.5, double J = 0.7);
/// f(v,w) = (w, -sigma^2 sin v - 2 mu w).
SystemSpec make_pendulum(double sigma = 1.0, double mu = 0.5);
/// f(z) = -a z + b.
SystemSpec make_linear_dissipative(double a, const std::vector<double>& b);

/// kinds: "constant" (C_g times the rectangular identity), "linear-bump"
/// (diagonal C_g (1 + tanh y_i)/2), "vanishing-at-zero" (diagonal C_g tanh(y_i)/2).
/// Each is scaled so max{|g|,|Dg|,|D^2 g|,|D^3 g|} = C_g. m = 0 means m = d.
/// C_g = 0 gives the zero field.
SystemSpec attach_diffusion(SystemSpec spec, const std::string& kind, double C_g, std::size_t m = 0);

/// Registry: "fhn" {epsilon, mu, I, J}, "pendulum" {sigma, mu},
/// "linear-dissipative" {a, b1..bd, dim}.
SystemSpec make_system(const std::string& name, const std::map<std::string, double>& params);
std::vector<std::string> model_names();

/// Central finite-difference Jacobian of f at y with step h (d*d row-major).
std::vector<double> fd_jacobian(const FieldFn& f, std::size_t d, const double* y, double h = 1e-6);

} // namespace roughlyap
