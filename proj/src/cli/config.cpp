#include "roughlyap/cli.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "roughlyap/common.hpp"

namespace roughlyap::cli {

using nlohmann::json;

Section::Section(json j, std::string path) : j_(std::move(j)), path_(std::move(path))
{
    if (j_.is_null()) j_ = json::object();
    if (!j_.is_object()) throw ConfigError((path_.empty() ? "config" : path_) + ": expected an object");
}

bool Section::has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

const json* Section::get(const std::string& key, bool required)
{
    used_.insert(key);
    if (!has(key)) {
        if (required) throw ConfigError(where(key) + ": required");
        return nullptr;
    }
    return &j_.at(key);
}

double Section::num(const std::string& key, std::optional<double> def)
{
    const json* v = get(key, !def);
    if (!v) return *def;
    if (!v->is_number()) throw ConfigError(where(key) + ": expected a number");
    return v->get<double>();
}

std::size_t Section::count(const std::string& key, std::optional<std::size_t> def)
{
    const json* v = get(key, !def);
    if (!v) return *def;
    if (!v->is_number_integer() || v->get<long long>() < 0)
        throw ConfigError(where(key) + ": expected a non-negative integer");
    return v->get<std::size_t>();
}

std::uint64_t Section::u64(const std::string& key, std::optional<std::uint64_t> def)
{
    const json* v = get(key, !def);
    if (!v) return *def;
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0))
        throw ConfigError(where(key) + ": expected a non-negative integer");
    return v->get<std::uint64_t>();
}

bool Section::flag(const std::string& key, std::optional<bool> def)
{
    const json* v = get(key, !def);
    if (!v) return *def;
    if (!v->is_boolean()) throw ConfigError(where(key) + ": expected true or false");
    return v->get<bool>();
}

std::string Section::str(const std::string& key, std::optional<std::string> def)
{
    const json* v = get(key, !def);
    if (!v) return *def;
    if (!v->is_string()) throw ConfigError(where(key) + ": expected a string");
    return v->get<std::string>();
}

std::vector<double> Section::nums(const std::string& key, std::optional<std::vector<double>> def)
{
    const json* v = get(key, !def);
    if (!v) return *def;
    if (!v->is_array()) throw ConfigError(where(key) + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : *v) {
        if (!e.is_number()) throw ConfigError(where(key) + ": expected an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

std::vector<int> Section::ints(const std::string& key, std::optional<std::vector<int>> def)
{
    const json* v = get(key, !def);
    if (!v) return *def;
    if (!v->is_array()) throw ConfigError(where(key) + ": expected an array of integers");
    std::vector<int> out;
    for (const auto& e : *v) {
        if (!e.is_number_integer()) throw ConfigError(where(key) + ": expected an array of integers");
        out.push_back(e.get<int>());
    }
    return out;
}

std::vector<std::vector<double>> Section::points(const std::string& key,
                                                 std::optional<std::vector<std::vector<double>>> def)
{
    const json* v = get(key, !def);
    if (!v) return *def;
    if (!v->is_array()) throw ConfigError(where(key) + ": expected an array of points");
    std::vector<std::vector<double>> out;
    for (const auto& p : *v) {
        if (!p.is_array()) throw ConfigError(where(key) + ": expected an array of points");
        std::vector<double> q;
        for (const auto& e : p) {
            if (!e.is_number()) throw ConfigError(where(key) + ": expected numeric coordinates");
            q.push_back(e.get<double>());
        }
        out.push_back(std::move(q));
    }
    return out;
}

std::map<std::string, double> Section::num_map(const std::string& key)
{
    const json* v = get(key, false);
    std::map<std::string, double> out;
    if (!v) return out;
    if (!v->is_object()) throw ConfigError(where(key) + ": expected an object of numbers");
    for (const auto& [k, e] : v->items()) {
        if (!e.is_number()) throw ConfigError(where(key) + "." + k + ": expected a number");
        out[k] = e.get<double>();
    }
    return out;
}

Section Section::sub(const std::string& key)
{
    const json* v = get(key, false);
    return Section(v ? *v : json::object(), where(key));
}

void Section::finish() const
{
    for (const auto& [k, v] : j_.items())
        if (!used_.count(k)) throw ConfigError(where(k) + ": unknown key");
}

std::vector<std::string> command_names()
{
    return {"fbm", "lift", "norms", "greedy", "simulate", "verify", "attractor", "train-net"};
}

namespace {

json fbm_section(double hurst, std::size_t dims, double dt, std::size_t n_steps)
{
    return {{"hurst", hurst}, {"dims", dims}, {"dt", dt}, {"n_steps", n_steps}};
}

json fhn_model(double C_g, const std::string& kind = "linear-bump")
{
    return {{"name", "fhn"},
            {"params", {{"epsilon", 0.08}, {"mu", 0.8}, {"I", 0.5}, {"J", 0.7}}},
            {"diffusion", {{"kind", kind}, {"C_g", C_g}}}};
}

json pendulum_model(double C_g = 0.0, const std::string& kind = "none")
{
    return {{"name", "pendulum"},
            {"params", {{"sigma", 1.0}, {"mu", 0.5}}},
            {"diffusion", {{"kind", kind}, {"C_g", C_g}}}};
}

json fhn_cert() { return {{"source", "fhn-explicit"}, {"C_lambda", 3.0}}; }

json oracle_section()
{
    return {{"starts", {{"lo", {-3.0, -3.0}}, {"hi", {3.0, 3.0}}}},
            {"res", 9},
            {"T", 200.0},
            {"clip", 100.0},
            {"dt", 0.01},
            {"fill_angles", 512},
            {"fill_radius", 1e-3},
            {"fill_T", 150.0},
            {"voxel", 0.01}};
}

json attractor_section(double dt, std::vector<double> horizons, std::size_t res)
{
    return {{"hurst", 0.4}, {"dt", dt}, {"horizons", horizons}, {"init_resolution", res}, {"radius_cap", 4.0}};
}

const std::map<std::string, std::map<std::string, json>>& profiles()
{
    static const std::map<std::string, std::map<std::string, json>> p = [] {
        std::map<std::string, std::map<std::string, json>> m;
        m["fbm"]["default"] = {{"fbm", fbm_section(0.4, 1, 1.0 / 1024.0, 1024)}};
        m["fbm"]["scaling"] = {{"fbm", fbm_section(0.4, 1, 1.0 / 1024.0, 1024)},
                               {"mode", "summary"},
                               {"samples", 10000}};
        m["lift"]["default"] = {{"fbm", fbm_section(0.4, 2, 1.0 / 1024.0, 1024)}};
        m["norms"]["default"] = {{"fbm", fbm_section(0.4, 2, 1.0 / 1024.0, 1024)}};
        m["greedy"]["default"] = {{"fbm", fbm_section(0.4, 2, 1.0 / 1024.0, 1024)},
                                  {"lambda", 0.5},
                                  {"C_p", 4.0},
                                  {"C_g", 0.05}};
        m["simulate"]["fhn-ensemble"] = {
            {"model", fhn_model(0.05)},
            {"noise", {{"hurst", 0.4}, {"dt", 1e-3}, {"T", 10.0}}},
            {"y0", {{1.0, 0.0}}},
            {"n_seeds", 100},
            {"record_stride", 100},
            {"check", {{"enabled", true}, {"C_p", 4.0}, {"screen_stride", 16}}},
            {"cert", fhn_cert()}};
        m["verify"]["fhn"] = {{"model", fhn_model(0.0, "none")},
                              {"cert", fhn_cert()},
                              {"domain", {{"lo", {-3.0, -3.0}}, {"hi", {3.0, 3.0}}, {"res", 200}}},
                              {"sampler", {{"n_psi", 64}, {"n_eta", 64}}}};
        m["verify"]["pendulum"] = {{"model", pendulum_model()},
                                   {"cert", {{"source", "classical"}}},
                                   {"domain", {{"lo", {-6.0, -6.0}}, {"hi", {6.0, 6.0}}, {"res", 200}}},
                                   {"sampler", {{"n_psi", 1}, {"n_eta", 1}}}};
        m["verify"]["pendulum-derived"] = {
            {"model", pendulum_model()},
            {"cert", {{"source", "derived-lipschitz2"}, {"C", 0.0}, {"lambda_fraction", 0.5}}},
            {"domain", {{"lo", {-6.0, -6.0}}, {"hi", {6.0, 6.0}}, {"res", 200}}},
            {"sampler", {{"n_psi", 64}, {"n_eta", 64}}}};
        m["attractor"]["fhn-deterministic"] = {{"model", fhn_model(0.0, "none")},
                                               {"experiment", "pullback"},
                                               {"attractor", attractor_section(1.0 / 256.0, {10, 20, 40}, 32)},
                                               {"oracle", oracle_section()},
                                               {"tolerance", 0.05}};
        m["attractor"]["semicontinuity"] = {{"model", fhn_model(0.0, "none")},
                                            {"experiment", "semicontinuity"},
                                            {"diffusion", "linear-bump"},
                                            {"C_g_list", {0.2, 0.1, 0.05, 0.01}},
                                            {"n_seeds", 20},
                                            {"attractor", attractor_section(1.0 / 256.0, {20}, 24)},
                                            {"oracle", oracle_section()}};
        m["attractor"]["stepsize"] = {{"model", fhn_model(0.05)},
                                      {"experiment", "stepsize"},
                                      {"steps", {0.1, 0.025, 0.00625}},
                                      {"n_seeds", 10},
                                      {"attractor", attractor_section(0.00625, {20}, 24)}};
        m["attractor"]["dyadic"] = {{"model", fhn_model(0.05)},
                                    {"experiment", "dyadic"},
                                    {"levels", {4, 6, 8}},
                                    {"n_seeds", 10},
                                    {"attractor", attractor_section(1.0 / 1024.0, {20}, 24)}};
        m["attractor"]["local-stability"] = {{"model", pendulum_model()},
                                             {"experiment", "local-stability"},
                                             {"diffusion", "vanishing-at-zero"},
                                             {"C_g_list", {0.05, 0.01, 0.0}},
                                             {"n_seeds", 10},
                                             {"local", {{"hurst", 0.4},
                                                        {"dt", 1.0 / 256.0},
                                                        {"T", 40.0},
                                                        {"y0_radii", {0.1}},
                                                        {"directions", 4},
                                                        {"domain_radius", 1.0}}}};
        m["train-net"]["linear"] = {
            {"model", {{"name", "linear-dissipative"}, {"params", {{"a", 1.0}, {"dim", 2}}}}},
            {"domain", {{"lo", {-2.0, -2.0}}, {"hi", {2.0, 2.0}}}},
            {"plan", {{"eps0", 0.2}, {"rho", 0.05}, {"m_psi", 8}, {"m_eta", 8}}},
            {"net", {{"h", 64}, {"s", 2}, {"alpha_bar", 0.5}}},
            {"train",
             {{"delta_bar", 0.45},
              {"C_bar", 1.05},
              {"lambda", 0.1},
              {"learning_rate", 0.05},
              {"max_iterations", 5000},
              {"tolerance", 1e-6}}},
            {"verify", {{"res", 200}, {"eps", 0.05}, {"threshold", 0.99}, {"n_psi", 16}, {"n_eta", 16}}}};
        return m;
    }();
    return p;
}

std::string getenv_str(const char* name)
{
    const char* v = std::getenv(name);
    return v ? std::string(v) : std::string();
}

std::uint64_t parse_u64(const std::string& s, const std::string& what)
{
    try {
        std::size_t pos = 0;
        if (s.empty() || s[0] == '-') throw std::invalid_argument(s);
        const unsigned long long v = std::stoull(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(what + ": expected a non-negative integer, got '" + s + "'");
    }
}

} // namespace

std::string default_profile(const std::string& command)
{
    static const std::map<std::string, std::string> d{{"fbm", "default"},       {"lift", "default"},
                                                      {"norms", "default"},     {"greedy", "default"},
                                                      {"simulate", "fhn-ensemble"}, {"verify", "fhn"},
                                                      {"attractor", "fhn-deterministic"}, {"train-net", "linear"}};
    auto it = d.find(command);
    return it == d.end() ? std::string() : it->second;
}

std::vector<std::string> profile_names(const std::string& command)
{
    std::vector<std::string> out;
    auto it = profiles().find(command);
    if (it != profiles().end())
        for (const auto& [k, v] : it->second) out.push_back(k);
    return out;
}

json builtin_profile(const std::string& command, const std::string& name)
{
    auto it = profiles().find(command);
    if (it == profiles().end() || !it->second.count(name))
        throw ConfigError("unknown profile '" + name + "' for " + command);
    return it->second.at(name);
}

json resolve_config(const Options& opt)
{
    const std::string path = !opt.config_path.empty() ? opt.config_path : getenv_str("ROUGHLYAP_CONFIG");
    std::string profile = opt.profile;
    if (profile.empty() && path.empty()) profile = default_profile(opt.command);
    json cfg = profile.empty() ? json::object() : builtin_profile(opt.command, profile);
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot read config " + path);
        json file;
        try {
            file = json::parse(in);
        } catch (const json::exception& e) {
            throw ConfigError("config " + path + ": " + e.what());
        }
        if (!file.is_object()) throw ConfigError("config " + path + ": expected a JSON object");
        cfg.merge_patch(file);
    }
    if (cfg.contains("command") && cfg["command"] != opt.command)
        throw ConfigError("config was resolved for '" + cfg["command"].dump() + "', not " + opt.command);

    auto cfg_u64 = [&](const char* key, std::uint64_t def) {
        if (!cfg.contains(key)) return def;
        const json& v = cfg[key];
        if (!v.is_number_integer() || v.get<long long>() < 0)
            throw ConfigError(std::string(key) + ": expected a non-negative integer");
        return v.get<std::uint64_t>();
    };
    std::uint64_t seed = cfg_u64("seed", 0);
    std::uint64_t threads = cfg_u64("threads", 0);
    std::string out = "out";
    if (cfg.contains("out")) {
        if (!cfg["out"].is_string()) throw ConfigError("out: expected a string");
        out = cfg["out"].get<std::string>();
    }
    if (const std::string e = getenv_str("ROUGHLYAP_SEED"); !e.empty()) seed = parse_u64(e, "ROUGHLYAP_SEED");
    if (const std::string e = getenv_str("ROUGHLYAP_THREADS"); !e.empty()) threads = parse_u64(e, "ROUGHLYAP_THREADS");
    if (const std::string e = getenv_str("ROUGHLYAP_OUT"); !e.empty()) out = e;
    if (opt.seed) seed = *opt.seed;
    if (opt.threads) {
        if (*opt.threads < 0) throw ConfigError("--threads must be >= 0");
        threads = static_cast<std::uint64_t>(*opt.threads);
    }
    if (!opt.out_dir.empty()) out = opt.out_dir;
    cfg["command"] = opt.command;
    cfg["seed"] = seed;
    cfg["threads"] = threads;
    cfg["out"] = out;
    return cfg;
}

int run(int argc, char** argv)
{
    CLI::App app{"Rough-path Lyapunov and attractor experiments"};
    app.require_subcommand(1);
    Options opt;
    std::uint64_t seed = 0;
    int threads = 0;
    bool list = false;
    std::vector<CLI::App*> subs;
    std::vector<CLI::Option*> seed_opts, thread_opts;
    for (const auto& name : command_names()) {
        CLI::App* sc = app.add_subcommand(name, "run the " + name + " command");
        sc->add_option("--config", opt.config_path, "JSON config file");
        sc->add_option("--profile", opt.profile, "builtin profile");
        seed_opts.push_back(sc->add_option("--seed", seed, "master seed"));
        sc->add_option("--out", opt.out_dir, "output directory");
        thread_opts.push_back(sc->add_option("--threads", threads, "worker cap (0 = default)"));
        sc->add_flag("--plot-script", opt.plot_script, "write a gnuplot script next to each table");
        sc->add_flag("--list-profiles", list, "print the builtin profiles and exit");
        subs.push_back(sc);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kPass : kConfigError;
    }
    for (std::size_t k = 0; k < subs.size(); ++k)
        if (subs[k]->parsed()) {
            opt.command = command_names()[k];
            if (seed_opts[k]->count()) opt.seed = seed;
            if (thread_opts[k]->count()) opt.threads = threads;
        }
    if (list) {
        for (const auto& p : profile_names(opt.command)) std::cout << p << "\n";
        return kPass;
    }
    json resolved;
    try {
        resolved = resolve_config(opt);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    }
    return execute(opt.command, resolved, opt.plot_script, std::cerr);
}

} // namespace roughlyap::cli
