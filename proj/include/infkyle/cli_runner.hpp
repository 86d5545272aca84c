#pragma once

// Subcommand orchestration: builds the model from a RunConfig, runs one
// experiment and writes its CSV outputs plus manifest.csv.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "infkyle/analytics.hpp"
#include "infkyle/config.hpp"
#include "infkyle/csv.hpp"
#include "infkyle/equilibrium_solver.hpp"
#include "infkyle/info_kernel.hpp"
#include "infkyle/insider_objective.hpp"
#include "infkyle/market_model.hpp"
#include "infkyle/options_bridge.hpp"
#include "infkyle/orderflow_sim.hpp"
#include "infkyle/posterior_engine.hpp"

namespace infkyle {

inline constexpr const char* tool_version = "0.1.0";
inline constexpr const char* output_dir_env = "INFKYLE_OUTPUT_DIR";

inline const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names = {"solve",   "simulate",   "impact",      "efficiency",
                                                   "options", "verify-foc", "kernel dump", "posterior probe"};
    return names;
}

struct Model {
    StateGrid grid;
    NoiseProfile noise;
    PayoffFamily family;
};

inline Model build_model(const RunConfig& c) {
    StateGrid grid(c.x_min, c.x_max, c.n);
    NoiseProfile noise = c.noise_kind == "tabulated" ? load_noise_profile(c.noise_file, grid)
                                                     : NoiseProfile::constant(grid, c.noise_sigma);
    PayoffFamily family = c.family_kind == FamilyKind::tabulated ? load_tabulated_family(c.family_file, grid)
                                                                 : make_payoff_family(c.family_kind, c.family, grid);
    return {std::move(grid), std::move(noise), std::move(family)};
}

inline SolverConfig solver_config(const RunConfig& c) {
    SolverConfig s;
    s.n_samples = c.n_samples;
    s.seed = c.seed;
    s.workers = c.workers;
    s.phi_tol = c.phi_tol;
    s.bisect_tol = c.bisect_tol;
    s.bracket_cap = c.bracket_cap;
    return s;
}

inline PathMcConfig path_config(const RunConfig& c) {
    PathMcConfig m;
    m.n_paths = c.n_paths;
    m.seed = substream_seed(c.seed, 0x9A7B5ull);  // path streams kept apart from posterior streams
    m.workers = c.workers;
    return m;
}

/// Output directory: the environment override wins over output.dir.
inline std::filesystem::path resolve_output_dir(const RunConfig& c) {
    if (const char* env = std::getenv(output_dir_env); env && *env) return env;
    return c.output_dir;
}

struct RunResult {
    std::filesystem::path output_dir;
    std::vector<std::string> files;
};

namespace detail {

inline void check_signal_index(int s, const PayoffFamily& f, const char* key) {
    if (s < 0 || s >= f.signal_count())
        throw Error("cli_runner", std::string(key) + " = " + std::to_string(s) + " is out of range for I = " +
                                      std::to_string(f.signal_count()));
}

inline std::vector<std::string> with_labels(const std::string& first, const std::string& prefix,
                                            const std::vector<std::string>& labels) {
    std::vector<std::string> h{first};
    for (const auto& l : labels) h.push_back(prefix + l);
    return h;
}

struct Solved {
    CanonicalKernel kernel;
    Equilibrium eq;
};

inline Solved solve_model(const Model& m, const RunConfig& c) {
    auto kernel = build_canonical_kernel(m.family, m.noise, m.grid);
    auto eq = solve_equilibrium(kernel, m.family, m.grid, solver_config(c));
    return {std::move(kernel), std::move(eq)};
}

inline void run_solve(const Model& m, const RunConfig& c, const std::filesystem::path& dir, RunResult& r) {
    const auto [kernel, eq] = solve_model(m, c);
    {
        csv::Writer w((dir / "equilibrium.csv").string());
        auto h = std::vector<std::string>{"signal", "alpha_eff_star", "alpha_star", "c", "phi_residual"};
        for (const auto& l : m.family.labels) h.push_back("beta_" + l);
        w.header(h);
        for (int i = 0; i < eq.I; ++i) {
            std::vector<std::string> cells{m.family.labels[i], csv::format(eq.alpha_eff_star), csv::format(eq.alpha_star),
                                           csv::format(eq.c), csv::format(eq.phi_residual)};
            for (int u = 0; u < eq.I; ++u) cells.push_back(csv::format(eq.beta_star(u, i)));
            w.line(cells);
        }
    }
    {
        csv::Writer w((dir / "demand_surface.csv").string());
        w.header(with_labels("x", "W_", m.family.labels));
        for (int j = 0; j < m.grid.size(); ++j) {
            std::vector<double> row{m.grid.node(j)};
            for (int i = 0; i < eq.I; ++i) row.push_back(eq.demand(i, j));
            w.row(row);
        }
    }
    r.files.insert(r.files.end(), {"equilibrium.csv", "demand_surface.csv"});
}

inline void run_simulate(const Model& m, const RunConfig& c, const std::filesystem::path& dir, RunResult& r) {
    check_signal_index(c.simulate_signal, m.family, "simulate.signal");
    const auto [kernel, eq] = solve_model(m, c);
    const PathMcConfig mc = path_config(c);
    const BeliefModel model(eq.demand, m.noise, m.grid);
    const Vector W = eq.demand.row(c.simulate_signal).transpose();
    std::vector<Vector> cum, prices;
    for (int k = 0; k < c.simulate_paths; ++k) {
        Path p = simulate_order_flow(W, m.noise, m.grid, path_seed(mc, static_cast<std::size_t>(k)));
        prices.push_back(price_schedule(model.posterior(p), m.family, m.grid));
        cum.push_back(std::move(p.cumulative));
    }
    std::vector<std::string> h{"x"};
    for (int k = 0; k < c.simulate_paths; ++k) h.push_back("path_" + std::to_string(k + 1));
    for (const auto& [name, data] : {std::pair{"paths.csv", &cum}, std::pair{"pathwise_prices.csv", &prices}}) {
        csv::Writer w((dir / name).string());
        w.header(h);
        for (int j = 0; j < m.grid.size(); ++j) {
            std::vector<double> row{m.grid.node(j)};
            for (const auto& v : *data) row.push_back(v[j]);
            w.row(row);
        }
    }
    r.files.insert(r.files.end(), {"paths.csv", "pathwise_prices.csv"});
}

inline void run_impact(const Model& m, const RunConfig& c, const std::filesystem::path& dir, RunResult& r) {
    if (c.impact_conditional_signal >= 0) check_signal_index(c.impact_conditional_signal, m.family, "impact.conditional_signal");
    const auto [kernel, eq] = solve_model(m, c);
    const auto idx = impact_subgrid(m.grid, std::min(c.impact_subgrid, m.grid.size()));
    ImpactConfig ic;
    ic.mc = path_config(c);
    ic.conditional_signal = c.impact_conditional_signal;
    const auto est = impact_kernel(idx, idx, eq, m.family, m.noise, m.grid, ic);
    csv::Writer w((dir / "impact_kernel.csv").string());
    w.header({"x", "y", "lambda", "std_err"});
    for (const auto& row : est)
        for (const auto& e : row) w.row(m.grid.node(e.x_index), m.grid.node(e.y_index), e.lambda, e.std_err);
    r.files.push_back("impact_kernel.csv");
}

inline void run_efficiency(const Model& m, const RunConfig& c, const std::filesystem::path& dir, RunResult& r) {
    const auto sweep = efficiency_sweep(c.efficiency_I, m.grid, m.noise, solver_config(c));
    csv::Writer w((dir / "efficiency.csv").string());
    w.header({"I", "alpha_eff_star", "ie", "std_err"});
    for (const auto& row : sweep.rows) w.row(row.I, row.alpha_eff_star, row.ie, row.std_err);
    r.files.push_back("efficiency.csv");
}

inline void run_options(const Model& m, const RunConfig& c, const std::filesystem::path& dir, RunResult& r) {
    check_signal_index(c.options_signal, m.family, "options.signal");
    const auto [kernel, eq] = solve_model(m, c);
    const double k0 = prior_mean(m.family, m.grid);
    const double sbar = prior_sd(m.family, m.grid);
    const Vector W = eq.demand.row(c.options_signal).transpose();
    const auto strip = bl_decompose(W, k0, m.grid);
    {
        csv::Writer w((dir / "strip.csv").string());
        w.comment("signal=" + m.family.labels[c.options_signal] + " k0=" + csv::format(strip.k0) +
                  " bond=" + csv::format(strip.bond) + " underlying=" + csv::format(strip.underlying));
        w.header({"K", "put_density", "call_density"});
        for (int j = 0; j < m.grid.size(); ++j) {
            const double put = j <= strip.k0_index ? strip.put_density[j] : 0.0;
            const double call = j >= strip.k0_index ? strip.call_density[j - strip.k0_index] : 0.0;
            w.row(m.grid.node(j), put, call);
        }
    }
    {
        csv::Writer w((dir / "options_summary.csv").string());
        w.header({"signal", "k0", "bond", "underlying", "signature"});
        for (int i = 0; i < m.family.signal_count(); ++i) {
            const Vector Wi = eq.demand.row(i).transpose();
            const auto s = bl_decompose(Wi, k0, m.grid);
            const auto sig = demand_signature(Wi, k0, sbar, m.grid);
            w.row(m.family.labels[i], s.k0, s.bond, s.underlying, sig.label);
        }
    }
    r.files.insert(r.files.end(), {"strip.csv", "options_summary.csv"});
}

inline void run_verify_foc(const Model& m, const RunConfig& c, const std::filesystem::path& dir, RunResult& r) {
    check_signal_index(c.foc_signal, m.family, "foc.signal");
    const auto [kernel, eq] = solve_model(m, c);
    const BeliefModel model(eq.demand, m.noise, m.grid);
    const Vector mbar = prior_mixture(m.family);
    const Vector W = eq.demand.row(c.foc_signal).transpose();
    csv::Writer w((dir / "foc_report.csv").string());
    w.header({"direction_id", "payoff_term", "ad_term", "impact_term", "fd_total", "residual", "std_err"});
    for (int k = 0; k < m.family.signal_count(); ++k) {
        const Vector v = m.family.row(k) - mbar;
        const auto rep = foc_terms(W, model, c.foc_signal, v, m.family, m.noise, m.grid, path_config(c),
                                   "centered_" + m.family.labels[k]);
        w.row(rep.direction_id, rep.payoff_term, rep.ad_term, rep.impact_term, rep.fd_total, rep.residual, rep.std_err);
    }
    r.files.push_back("foc_report.csv");
}

inline void run_kernel_dump(const Model& m, const RunConfig&, const std::filesystem::path& dir, RunResult& r) {
    const auto k = build_canonical_kernel(m.family, m.noise, m.grid);
    {
        csv::Writer w((dir / "kernel.csv").string());
        w.header({"i", "j", "K", "Q", "L", "L_pinv"});
        for (int i = 0; i < k.signal_count(); ++i)
            for (int j = 0; j < k.signal_count(); ++j) w.row(i, j, k.K(i, j), k.Q(i, j), k.L(i, j), k.L_pinv(i, j));
    }
    {
        csv::Writer w((dir / "kernel_summary.csv").string());
        w.header({"I", "c", "exchangeable", "exchange_defect", "degenerate"});
        w.row(k.signal_count(), k.c, k.exchangeable ? 1 : 0, k.exchange_defect, k.degenerate ? 1 : 0);
    }
    r.files.insert(r.files.end(), {"kernel.csv", "kernel_summary.csv"});
}

inline void run_posterior_probe(const Model& m, const RunConfig& c, const std::filesystem::path& dir, RunResult& r) {
    const int I = m.family.signal_count();
    const CrnNoise crn(I, c.n_samples, c.seed, c.workers);
    csv::Writer w((dir / "posterior_probe.csv").string());
    w.header({"alpha_eff", "I", "m1_true", "std_err_m1", "qcq_diag", "phi"});
    for (double a : c.posterior_alphas) {
        const auto mom = posterior_moments(a, 0, crn, c.workers);
        w.row(a, I, mom.m1[0], mom.std_err_m1, mom.qcq_diag, phi(a, I, mom));
    }
    r.files.push_back("posterior_probe.csv");
}

}  // namespace detail

/// Runs one subcommand and writes its outputs. Errors propagate as
/// module-qualified infkyle::Error.
inline RunResult run(const std::string& subcommand, const RunConfig& c) {
    const auto t0 = std::chrono::steady_clock::now();
    RunResult r;
    r.output_dir = resolve_output_dir(c);
    std::filesystem::create_directories(r.output_dir);
    const Model m = build_model(c);
    const auto& dir = r.output_dir;

    if (subcommand == "solve") detail::run_solve(m, c, dir, r);
    else if (subcommand == "simulate") detail::run_simulate(m, c, dir, r);
    else if (subcommand == "impact") detail::run_impact(m, c, dir, r);
    else if (subcommand == "efficiency") detail::run_efficiency(m, c, dir, r);
    else if (subcommand == "options") detail::run_options(m, c, dir, r);
    else if (subcommand == "verify-foc") detail::run_verify_foc(m, c, dir, r);
    else if (subcommand == "kernel dump") detail::run_kernel_dump(m, c, dir, r);
    else if (subcommand == "posterior probe") detail::run_posterior_probe(m, c, dir, r);
    else throw Error("cli_runner", "unknown subcommand '" + subcommand + "'");

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a64(c.canonical())));
    csv::Writer w((dir / "manifest.csv").string());
    w.header({"key", "value"});
    w.row("tool_version", tool_version);
    w.row("subcommand", subcommand);
    w.row("config_hash", std::string(hash));
    w.row("seed", std::to_string(c.seed));
    w.row("n_samples", std::to_string(c.n_samples));
    w.row("n_paths", std::to_string(c.n_paths));
    w.row("workers", std::to_string(c.workers));
    w.row("wall_time_s", wall);
    for (const auto& f : r.files) w.row("output", f);
    r.files.push_back("manifest.csv");
    return r;
}

}  // namespace infkyle
