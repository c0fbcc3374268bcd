#include "switchq/cli.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <optional>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"switchq: alternating-environment M/M/1 queue analytics and simulation"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<std::string> format;
    std::optional<std::uint64_t> seed;

    const char* names[] = {"steady", "transient", "fpt", "diffusion", "simulate", "compare"};
    const char* descriptions[] = {
        "steady-state pmf, means and entropies of the switching queue",
        "transient joint pmf p_{n,i}(t) (one-way switching)",
        "first-emptying density, transform, probability and mean (one-way switching)",
        "diffusion steady density and first-passage quantities",
        "Monte Carlo estimates (sim.target selects the estimator)",
        "discrete steady state vs scaled diffusion density",
    };
    for (size_t i = 0; i < 6; ++i) {
        auto* sub = app.add_subcommand(names[i], descriptions[i]);
        sub->add_option("--config", config_path, "JSON config file")->required();
        sub->add_option("--out", out_dir, "output directory (overrides config)");
        sub->add_option("--format", format, "csv or json (overrides config)");
        sub->add_option("--seed", seed, "simulation seed (overrides config)");
    }

    CLI11_PARSE(app, argc, argv);
    const auto cmd = switchq::cli::command_from_name(app.get_subcommands().front()->get_name());
    return switchq::cli::run_cli(cmd, config_path, out_dir, format, seed);
}
