#pragma once

// Flat `section.key = value` run configuration. See docs/config.md.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "infkyle/csv.hpp"
#include "infkyle/error.hpp"
#include "infkyle/market_model.hpp"

namespace infkyle {

struct RunConfig {
    // grid
    double x_min = -5.0;
    double x_max = 5.0;
    int n = 401;
    // noise
    std::string noise_kind = "constant";
    double noise_sigma = 1.0;
    std::string noise_file;
    // family
    FamilyKind family_kind = FamilyKind::gaussian_mean_shift;
    FamilyParams family;
    std::string family_file;
    // mc
    std::size_t n_samples = 200000;
    std::size_t n_paths = 20000;
    std::uint64_t seed = 0;
    bool has_seed = false;
    unsigned workers = 1;
    // solver
    double phi_tol = 1e-4;
    double bracket_cap = 1048576.0;
    double bisect_tol = 1e-6;
    // subcommands
    int impact_subgrid = 21;
    int impact_conditional_signal = -1;
    std::vector<int> efficiency_I = {2, 4, 6, 8};
    int simulate_paths = 5;
    int simulate_signal = 0;
    int foc_signal = 0;
    int options_signal = 0;
    std::vector<double> posterior_alphas = {0.0, 0.5, 1.0, 1.5, 2.0};
    std::string output_dir = "out";

    /// Canonical `key=value` lines of every setting, sorted by key.
    std::string canonical() const;
};

namespace detail {

inline std::string trim(std::string s) {
    const auto issp = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
    while (!s.empty() && issp(s.back())) s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && issp(s[i])) ++i;
    return s.substr(i);
}

inline double to_real(const std::string& key, const std::string& v) { return csv::parse_double(v, "config key '" + key + "'"); }

inline long long to_integer(const std::string& key, const std::string& v) {
    const double d = to_real(key, v);
    if (!std::isfinite(d) || d != std::floor(d) || std::abs(d) > 9.0e15)
        throw Error("cli_runner", "config key '" + key + "' must be an integer, got '" + v + "'");
    return static_cast<long long>(d);
}

inline std::vector<double> to_reals(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (const auto& f : csv::split(v)) {
        if (f.empty()) throw Error("cli_runner", "config key '" + key + "' has an empty list entry");
        out.push_back(to_real(key, f));
    }
    return out;
}

inline std::vector<int> to_integers(const std::string& key, const std::string& v) {
    std::vector<int> out;
    for (const auto& f : csv::split(v)) out.push_back(static_cast<int>(to_integer(key, f)));
    return out;
}

inline std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + csv::format(v[i]);
    return s;
}

inline std::string join(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

}  // namespace detail

inline std::string RunConfig::canonical() const {
    std::map<std::string, std::string> kv;
    kv["grid.x_min"] = csv::format(x_min);
    kv["grid.x_max"] = csv::format(x_max);
    kv["grid.n"] = std::to_string(n);
    kv["noise.kind"] = noise_kind;
    kv["noise.sigma"] = csv::format(noise_sigma);
    kv["noise.file"] = noise_file;
    kv["family.kind"] = to_string(family_kind);
    kv["family.means"] = detail::join(family.means);
    kv["family.sds"] = detail::join(family.sds);
    kv["family.shapes"] = detail::join(family.shapes);
    kv["family.locations"] = detail::join(family.locations);
    kv["family.scales"] = detail::join(family.scales);
    kv["family.file"] = family_file;
    kv["mc.n_samples"] = std::to_string(n_samples);
    kv["mc.n_paths"] = std::to_string(n_paths);
    kv["mc.seed"] = std::to_string(seed);
    kv["mc.workers"] = std::to_string(workers);
    kv["solver.phi_tol"] = csv::format(phi_tol);
    kv["solver.bracket_cap"] = csv::format(bracket_cap);
    kv["solver.bisect_tol"] = csv::format(bisect_tol);
    kv["impact.subgrid"] = std::to_string(impact_subgrid);
    kv["impact.conditional_signal"] = std::to_string(impact_conditional_signal);
    kv["efficiency.I_list"] = detail::join(efficiency_I);
    kv["simulate.paths"] = std::to_string(simulate_paths);
    kv["simulate.signal"] = std::to_string(simulate_signal);
    kv["foc.signal"] = std::to_string(foc_signal);
    kv["options.signal"] = std::to_string(options_signal);
    kv["posterior.alphas"] = detail::join(posterior_alphas);
    kv["output.dir"] = output_dir;
    std::string out;
    for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
    return out;
}

/// Parses config text. `base_dir` resolves relative file paths; a seed
/// override replaces (or supplies) mc.seed.
inline RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {},
                              std::optional<std::uint64_t> seed_override = std::nullopt) {
    RunConfig c;
    std::map<std::string, std::string> seen;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error("cli_runner", "config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw Error("cli_runner", "config line " + std::to_string(lineno) + ": empty key");
        if (seen.count(key)) throw Error("cli_runner", "config key '" + key + "' appears twice");
        seen[key] = val;
    }

    auto resolve = [&](const std::string& p) {
        if (p.empty()) return p;
        const std::filesystem::path fp(p);
        return (fp.is_relative() && !base_dir.empty() ? base_dir / fp : fp).string();
    };

    for (const auto& [key, v] : seen) {
        using namespace detail;
        if (key == "grid.x_min") c.x_min = to_real(key, v);
        else if (key == "grid.x_max") c.x_max = to_real(key, v);
        else if (key == "grid.n") c.n = static_cast<int>(to_integer(key, v));
        else if (key == "noise.kind") c.noise_kind = v;
        else if (key == "noise.sigma") c.noise_sigma = to_real(key, v);
        else if (key == "noise.file") c.noise_file = resolve(v);
        else if (key == "family.kind") c.family_kind = parse_family_kind(v);
        else if (key == "family.means") c.family.means = to_reals(key, v);
        else if (key == "family.sds") c.family.sds = to_reals(key, v);
        else if (key == "family.shapes") c.family.shapes = to_reals(key, v);
        else if (key == "family.locations") c.family.locations = to_reals(key, v);
        else if (key == "family.scales") c.family.scales = to_reals(key, v);
        else if (key == "family.file") c.family_file = resolve(v);
        else if (key == "mc.n_samples") {
            const auto x = to_integer(key, v);
            if (x <= 0) throw Error("cli_runner", "mc.n_samples must be positive");
            c.n_samples = static_cast<std::size_t>(x);
        } else if (key == "mc.n_paths") {
            const auto x = to_integer(key, v);
            if (x <= 0) throw Error("cli_runner", "mc.n_paths must be positive");
            c.n_paths = static_cast<std::size_t>(x);
        } else if (key == "mc.seed") {
            std::uint64_t s = 0;
            auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), s);
            if (ec != std::errc{} || p != v.data() + v.size())
                throw Error("cli_runner", "mc.seed must be an unsigned 64-bit integer, got '" + v + "'");
            c.seed = s;
            c.has_seed = true;
        } else if (key == "mc.workers") {
            const auto x = to_integer(key, v);
            if (x < 0) throw Error("cli_runner", "mc.workers must be >= 0");
            c.workers = static_cast<unsigned>(x);
        } else if (key == "solver.phi_tol") c.phi_tol = to_real(key, v);
        else if (key == "solver.bracket_cap") c.bracket_cap = to_real(key, v);
        else if (key == "solver.bisect_tol") c.bisect_tol = to_real(key, v);
        else if (key == "impact.subgrid") c.impact_subgrid = static_cast<int>(to_integer(key, v));
        else if (key == "impact.conditional_signal") c.impact_conditional_signal = static_cast<int>(to_integer(key, v));
        else if (key == "efficiency.I_list") c.efficiency_I = to_integers(key, v);
        else if (key == "simulate.paths") c.simulate_paths = static_cast<int>(to_integer(key, v));
        else if (key == "simulate.signal") c.simulate_signal = static_cast<int>(to_integer(key, v));
        else if (key == "foc.signal") c.foc_signal = static_cast<int>(to_integer(key, v));
        else if (key == "options.signal") c.options_signal = static_cast<int>(to_integer(key, v));
        else if (key == "posterior.alphas") c.posterior_alphas = to_reals(key, v);
        else if (key == "output.dir") c.output_dir = v;
        else throw Error("cli_runner", "unknown config key '" + key + "'");
    }

    if (seed_override) {
        c.seed = *seed_override;
        c.has_seed = true;
    }
    if (!c.has_seed) throw Error("cli_runner", "config must set mc.seed explicitly");
    if (c.n < 3) throw Error("cli_runner", "grid.n must be >= 3");
    if (!(c.x_min < c.x_max)) throw Error("cli_runner", "grid.x_min must be below grid.x_max");
    if (c.noise_kind != "constant" && c.noise_kind != "tabulated")
        throw Error("cli_runner", "noise.kind must be constant or tabulated");
    if (c.noise_kind == "constant" && !(c.noise_sigma > 0.0)) throw Error("cli_runner", "noise.sigma must be positive");
    if (c.noise_kind == "tabulated" && c.noise_file.empty())
        throw Error("cli_runner", "noise.kind = tabulated needs noise.file");
    if (c.family_kind == FamilyKind::tabulated && c.family_file.empty())
        throw Error("cli_runner", "family.kind = tabulated needs family.file");
    for (const auto* f : {&c.noise_file, &c.family_file})
        if (!f->empty() && !std::filesystem::exists(*f)) throw Error("cli_runner", "referenced file '" + *f + "' not found");
    if (!(c.phi_tol > 0.0) || !(c.bisect_tol > 0.0) || !(c.bracket_cap >= 1.0))
        throw Error("cli_runner", "solver tolerances must be positive and bracket_cap >= 1");
    if (c.impact_subgrid < 2) throw Error("cli_runner", "impact.subgrid must be >= 2");
    if (c.efficiency_I.empty()) throw Error("cli_runner", "efficiency.I_list is empty");
    for (int I : c.efficiency_I)
        if (I < 2) throw Error("cli_runner", "efficiency.I_list entries must be >= 2");
    if (c.simulate_paths < 1) throw Error("cli_runner", "simulate.paths must be >= 1");
    for (double a : c.posterior_alphas)
        if (!(a >= 0.0)) throw Error("cli_runner", "posterior.alphas must be nonnegative");

    // Defaults for the generated family when no parameters are given.
    if (c.family_kind == FamilyKind::gaussian_mean_shift && c.family.means.empty()) c.family.means = {1.0, -1.0};
    if (c.family_kind == FamilyKind::gaussian_mean_shift && c.family.sds.empty()) c.family.sds = {1.0};
    if (c.family_kind == FamilyKind::gaussian_variance && c.family.means.empty()) c.family.means = {2.0};
    if (c.family_kind == FamilyKind::gaussian_variance && c.family.sds.empty()) c.family.sds = {1.65, 0.65};
    if (c.family_kind == FamilyKind::skew_normal && c.family.shapes.empty()) c.family.shapes = {4.0, -4.0};
    return c;
}

inline RunConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_override = std::nullopt) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cli_runner", "cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), std::filesystem::path(path).parent_path(), seed_override);
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace infkyle
