#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "commands.hpp"
#include "config.hpp"

namespace {

struct SubArgs {
    std::string config;
    crossdiff::cli::CommonOverrides overrides;
};

void add_common_options(CLI::App* sub, SubArgs& args) {
    sub->add_option("--config", args.config, "configuration file (INI-style)")
        ->required()
        ->type_name("FILE");
    sub->add_option("--seed", args.overrides.seed, "override the master seed")
        ->type_name("UINT64");
    sub->add_option("--out", args.overrides.out, "override the output directory")
        ->type_name("DIR");
    sub->add_option("--threads", args.overrides.threads, "worker threads for path ensembles")
        ->check(CLI::Range(1, 512));
    sub->add_flag("--quiet", args.overrides.quiet, "suppress progress output");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Structure-preserving solver laboratory for stochastic cross-diffusion\n"
                 "systems with volume filling"};
    app.require_subcommand(1);

    SubArgs simulate_args, check_args, converge_args, sweep_args;
    CLI::App* simulate =
        app.add_subcommand("simulate", "integrate trajectories and write ensemble reports");
    add_common_options(simulate, simulate_args);
    CLI::App* check = app.add_subcommand("check-assumptions",
                                         "certify the structural hypotheses of a model");
    add_common_options(check, check_args);
    CLI::App* converge = app.add_subcommand("converge", "run a convergence ladder study");
    add_common_options(converge, converge_args);
    CLI::App* sweep = app.add_subcommand("sweep", "repeat a simulation over parameter values");
    add_common_options(sweep, sweep_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        using namespace crossdiff::cli;
        if (simulate->parsed())
            return cmd_simulate(simulate_args.config, simulate_args.overrides);
        if (check->parsed())
            return cmd_check_assumptions(check_args.config, check_args.overrides);
        if (converge->parsed())
            return cmd_converge(converge_args.config, converge_args.overrides);
        if (sweep->parsed()) return cmd_sweep(sweep_args.config, sweep_args.overrides);
        std::cerr << "error: no subcommand selected\n";
        return 2;
    } catch (const crossdiff::cli::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
