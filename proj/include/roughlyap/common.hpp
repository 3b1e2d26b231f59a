#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace roughlyap {

/// Bad input: out-of-range parameters, malformed grids, shape mismatches.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure could not produce a result (non-PSD covariance, divergence, ...).
class ComputationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Serial runs the reference loop; Parallel runs the same loop under OpenMP.
enum class Exec { Serial, Parallel };

/// Set the OpenMP thread count used by Exec::Parallel kernels (0 = runtime default).
void set_threads(int n);
int max_threads();

/// splitmix64 finaliser; used to derive per-sample seeds from a master seed.
std::uint64_t mix64(std::uint64_t x);
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index)
{
    return mix64(master ^ mix64(index + 0x9e3779b97f4a7c15ULL));
}

/// FNV-1a over a byte string, printed as 16 hex digits.
std::string content_hash(const std::string& bytes);

/// Axis-aligned box [lo_i, hi_i].
struct Box {
    std::vector<double> lo, hi;

    std::size_t dim() const { return lo.size(); }
    double volume() const;
    bool contains(const double* z) const;
    void validate() const;
    static Box cube(std::size_t d, double half_width);
};

/// Tensor grid with `res` points per axis including the endpoints; point k is
/// in lexicographic order (last axis fastest).
struct BoxGrid {
    Box box;
    std::size_t res = 2;

    std::size_t size() const;
    void point(std::size_t k, double* z) const;
};

} // namespace roughlyap
