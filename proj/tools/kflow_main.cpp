// kflow: decompose / morse / simulate / verify for translation flows on SO(n)
// viewed as SL(n,R)/AN.

#include "kflow/scenario.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"translation dynamics on the maximal compact subgroup of SL(n,R)"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    double horizon = 0;
    bool horizon_set = false;
    int grid = 0;
    bool grid_set = false;

    auto add_common = [&](CLI::App* cmd, bool with_sim_flags) {
        cmd->add_option("--scenario", scenario_path, "scenario JSON file")->required();
        cmd->add_option("--out", out_dir, "output directory (default: stdout)");
        cmd->add_option("--seed", seed, "random seed override")->each([&](const std::string&) {
            seed_set = true;
        });
        if (with_sim_flags) {
            cmd->add_option("--horizon", horizon, "simulation horizon override")
                ->each([&](const std::string&) { horizon_set = true; });
            cmd->add_option("--grid", grid, "grid resolution override")
                ->each([&](const std::string&) { grid_set = true; });
        }
    };

    auto* decompose = app.add_subcommand("decompose", "adapted Jordan decomposition report");
    add_common(decompose, false);
    auto* morse = app.add_subcommand("morse", "minimal Morse decomposition report");
    add_common(morse, false);
    auto* simulate = app.add_subcommand("simulate", "trajectory or basin-map CSV");
    add_common(simulate, true);
    auto* verify = app.add_subcommand("verify", "run the invariant suite for the scenario");
    add_common(verify, true);

    CLI11_PARSE(app, argc, argv);

    kflow::scenario::Scenario s;
    try {
        s = kflow::scenario::load_scenario(scenario_path);
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }
    if (!out_dir.empty()) s.output_dir = out_dir;
    if (seed_set) s.seed = seed;
    if (horizon_set) s.horizon = horizon;
    if (grid_set) s.grid_resolution = grid;

    if (decompose->parsed()) return kflow::scenario::run_decompose(s, std::cout, std::cerr);
    if (morse->parsed()) return kflow::scenario::run_morse(s, std::cout, std::cerr);
    if (simulate->parsed()) return kflow::scenario::run_simulate(s, std::cout, std::cerr);
    return kflow::scenario::run_verify(s, std::cout, std::cerr);
}
