#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "cubic_observer/commands.hpp"

namespace cli = cubic_obs::cli;

namespace {

void add_common(CLI::App* cmd, cli::CommandOptions& opts) {
    cmd->add_option("--out", opts.out, "Output file (or directory for `example`)");
    cmd->add_option("--dt", opts.dt, "Integration step override")->check(CLI::PositiveNumber);
    cmd->add_option("--horizon", opts.horizon, "Simulation horizon override")->check(CLI::PositiveNumber);
    cmd->add_option("--eps", opts.eps, "Plant perturbation A + eps I");
    cmd->add_option("--seed", opts.seed, "Seed for the equilibrium search");
    cmd->add_option("--format", opts.format, "Report format")->check(CLI::IsMember({"json", "csv"}));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cubic state observers: design, certification and simulation"};
    app.require_subcommand(1);

    cli::CommandOptions opts;
    std::string config;
    int example = 0;

    auto* design = app.add_subcommand("design", "Synthesize gains and print certificates as JSON");
    design->add_option("config", config, "Run configuration (JSON)")->required();
    add_common(design, opts);

    auto* simulate = app.add_subcommand("simulate", "Simulate and write the trace CSV");
    simulate->add_option("config", config, "Run configuration (JSON)")->required();
    add_common(simulate, opts);

    auto* sweep = app.add_subcommand("sweep-gamma", "Metrics over a list of gamma values");
    sweep->add_option("config", config, "Run configuration (JSON)")->required();
    sweep->add_option("--gammas", opts.gammas, "Comma-separated gamma values")->delimiter(',')->required();
    add_common(sweep, opts);
    sweep->get_option("--format")->default_str("csv");

    auto* ex = app.add_subcommand("example", "Reproduce a built-in example (1, 2 or 3)");
    ex->add_option("n", example, "Example number")->required()->check(CLI::Range(1, 3));
    add_common(ex, opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? cli::kExitOk : cli::kExitUsage;
    }

    if (*sweep && sweep->get_option("--format")->count() == 0) opts.format = "csv";

    if (*design) return cli::cmd_design(config, opts, std::cout, std::cerr);
    if (*simulate) return cli::cmd_simulate(config, opts, std::cout, std::cerr);
    if (*sweep) return cli::cmd_sweep_gamma(config, opts, std::cout, std::cerr);
    return cli::cmd_example(example, opts, std::cout, std::cerr);
}
