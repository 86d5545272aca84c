// infkyle: command-line front end for the equilibrium engine.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "infkyle/cli_runner.hpp"
#include "infkyle/config.hpp"

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("-c,--config", c.config, "run configuration (key = value)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", c.seed, "override mc.seed");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Many-asset insider trading equilibrium engine"};
    app.set_version_flag("--version", std::string(infkyle::tool_version));
    app.require_subcommand(1);

    Common common;
    std::vector<int> I_list;
    std::string chosen;

    for (const char* name : {"solve", "simulate", "impact", "efficiency", "options", "verify-foc"}) {
        auto* sub = app.add_subcommand(name, "");
        add_common(sub, common);
        if (std::string(name) == "efficiency")
            sub->add_option("--I", I_list, "signal counts, e.g. 2,4,6,8")->delimiter(',');
        sub->callback([&chosen, name] { chosen = name; });
    }
    app.get_subcommand("solve")->description("solve the equilibrium; writes equilibrium.csv, demand_surface.csv");
    app.get_subcommand("simulate")->description("simulate order flow; writes paths.csv, pathwise_prices.csv");
    app.get_subcommand("impact")->description("price-impact kernel on a sub-grid; writes impact_kernel.csv");
    app.get_subcommand("efficiency")->description("information efficiency across I; writes efficiency.csv");
    app.get_subcommand("options")->description("Breeden-Litzenberger strip; writes strip.csv, options_summary.csv");
    app.get_subcommand("verify-foc")->description("FOC decomposition at equilibrium; writes foc_report.csv");

    auto* kernel = app.add_subcommand("kernel", "information kernel tools");
    kernel->require_subcommand(1);
    auto* dump = kernel->add_subcommand("dump", "write K, Q, L, L+ and c; writes kernel.csv, kernel_summary.csv");
    add_common(dump, common);
    dump->callback([&chosen] { chosen = "kernel dump"; });

    auto* posterior = app.add_subcommand("posterior", "canonical posterior tools");
    posterior->require_subcommand(1);
    auto* probe = posterior->add_subcommand("probe", "moment sweep over posterior.alphas; writes posterior_probe.csv");
    add_common(probe, common);
    probe->callback([&chosen] { chosen = "posterior probe"; });

    CLI11_PARSE(app, argc, argv);

    try {
        auto cfg = infkyle::load_config(common.config, common.seed);
        if (!I_list.empty()) {
            for (int I : I_list)
                if (I < 2) throw infkyle::Error("cli_runner", "--I entries must be >= 2");
            cfg.efficiency_I = I_list;
        }
        const auto res = infkyle::run(chosen, cfg);
        for (const auto& f : res.files) std::cout << (res.output_dir / f).string() << '\n';
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
