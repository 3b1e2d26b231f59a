#include "roughlyap/rough_core.hpp"

#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace roughlyap {

namespace {

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_csv(const std::string& file, const PathSample& p, const std::vector<double>* level2)
{
    std::ofstream out(file);
    if (!out) throw ParameterError("cannot open " + file + " for writing");
    const std::size_t m = p.dims;
    out << "t";
    for (std::size_t a = 0; a < m; ++a) out << ",x" << a + 1;
    if (level2)
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < m; ++b) out << ",X" << a + 1 << b + 1;
    out << "\n";
    for (std::size_t k = 0; k < p.grid.nodes(); ++k) {
        out << fmt(p.grid.time(k));
        for (std::size_t a = 0; a < m; ++a) out << "," << fmt(p.node(k)[a]);
        if (level2)
            for (std::size_t e = 0; e < m * m; ++e) out << "," << fmt(k == 0 ? 0.0 : (*level2)[(k - 1) * m * m + e]);
        out << "\n";
    }
}

} // namespace

void write_path_csv(const std::string& file, const RoughPath& rp) { write_csv(file, rp.path, &rp.level2); }

void write_path_csv(const std::string& file, const PathSample& path) { write_csv(file, path, nullptr); }

void write_path_meta(const std::string& file, const PathSample& path)
{
    nlohmann::ordered_json j;
    j["t0"] = path.grid.t0;
    j["dt"] = path.grid.dt;
    j["n_steps"] = path.grid.n_steps;
    j["dims"] = path.dims;
    j["hurst"] = path.meta.hurst;
    j["seed"] = path.meta.seed;
    j["generator"] = path.meta.generator;
    j["method"] = path.meta.method;
    j["lift"] = "piecewise-linear";
    std::ofstream out(file);
    if (!out) throw ParameterError("cannot open " + file + " for writing");
    out << j.dump(2) << "\n";
}

RoughPath read_path_csv(const std::string& file, const std::string& meta_file)
{
    std::ifstream in(file);
    if (!in) throw ParameterError("cannot open " + file);
    std::string line;
    if (!std::getline(in, line)) throw ParameterError(file + ": empty file");
    std::size_t n_cols = 1, m = 0;
    for (std::size_t pos = 0; (pos = line.find(',', pos)) != std::string::npos; ++pos) ++n_cols;
    for (std::size_t pos = 0; (pos = line.find(",x", pos)) != std::string::npos; ++pos) ++m;
    if (m == 0) throw ParameterError(file + ": header has no x columns");
    const bool has_level2 = n_cols == 1 + m + m * m;
    if (!has_level2 && n_cols != 1 + m) throw ParameterError(file + ": unexpected column count");

    std::vector<double> times, values, level2;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() != n_cols) throw ParameterError(file + ": ragged row");
        times.push_back(row[0]);
        values.insert(values.end(), row.begin() + 1, row.begin() + 1 + static_cast<std::ptrdiff_t>(m));
        if (has_level2 && times.size() > 1)
            level2.insert(level2.end(), row.begin() + 1 + static_cast<std::ptrdiff_t>(m), row.end());
    }
    if (times.size() < 2) throw ParameterError(file + ": need at least two rows");

    PathSample p;
    p.dims = m;
    p.grid = Grid{times[0], (times.back() - times[0]) / static_cast<double>(times.size() - 1), times.size() - 1};
    p.values = std::move(values);
    if (!meta_file.empty()) {
        std::ifstream mf(meta_file);
        if (mf) {
            auto j = nlohmann::json::parse(mf);
            p.grid.t0 = j.value("t0", p.grid.t0);
            p.grid.dt = j.value("dt", p.grid.dt);
            p.meta.hurst = j.value("hurst", -1.0);
            p.meta.seed = j.value("seed", std::uint64_t{0});
            p.meta.generator = j.value("generator", std::string("custom"));
            p.meta.method = j.value("method", std::string());
        }
    }
    if (p.meta.generator.empty()) p.meta.generator = "custom";
    if (!has_level2) return lift(p);
    RoughPath rp;
    rp.path = std::move(p);
    rp.level2 = std::move(level2);
    rp.validate();
    return rp;
}

} // namespace roughlyap
