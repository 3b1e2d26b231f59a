#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace roughlyap::cli {

enum Exit : int { kPass = 0, kVerifyFail = 1, kComputeFail = 2, kConfigError = 3 };

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Typed reader over one JSON object; remembers the keys read so that
/// finish() can reject unknown ones.
class Section {
public:
    Section(nlohmann::json j, std::string path);

    bool has(const std::string& key) const;
    double num(const std::string& key, std::optional<double> def = std::nullopt);
    std::size_t count(const std::string& key, std::optional<std::size_t> def = std::nullopt);
    std::uint64_t u64(const std::string& key, std::optional<std::uint64_t> def = std::nullopt);
    bool flag(const std::string& key, std::optional<bool> def = std::nullopt);
    std::string str(const std::string& key, std::optional<std::string> def = std::nullopt);
    std::vector<double> nums(const std::string& key, std::optional<std::vector<double>> def = std::nullopt);
    std::vector<int> ints(const std::string& key, std::optional<std::vector<int>> def = std::nullopt);
    std::vector<std::vector<double>> points(const std::string& key,
                                            std::optional<std::vector<std::vector<double>>> def = std::nullopt);
    std::map<std::string, double> num_map(const std::string& key);
    /// Missing key gives an empty section.
    Section sub(const std::string& key);
    void finish() const;

private:
    const nlohmann::json* get(const std::string& key, bool required);
    std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    nlohmann::json j_;
    std::string path_;
    std::set<std::string> used_;
};

struct Options {
    std::string command;
    std::string config_path;
    std::string profile;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    bool plot_script = false;
};

std::vector<std::string> command_names();
std::vector<std::string> profile_names(const std::string& command);
/// Profile used when neither --profile nor a config file is given.
std::string default_profile(const std::string& command);
nlohmann::json builtin_profile(const std::string& command, const std::string& name);

/// Profile (or the default one when no config file is given), then config file (merge patch), then ROUGHLYAP_ environment, then flags.
/// The result carries "seed", "threads" and "out" at the top level.
nlohmann::json resolve_config(const Options& opt);

/// Runs one subcommand on a resolved config; returns the exit code.
int execute(const std::string& command, const nlohmann::json& resolved, bool plot_script, std::ostream& log);

int run(int argc, char** argv);

} // namespace roughlyap::cli
