#pragma once

#include "kflow/flow.hpp"
#include "kflow/jordan.hpp"
#include "kflow/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace kflow::scenario {

// Parsed scenario file: the flow generator plus run parameters. Unknown keys
// are rejected.
struct Scenario {
    int n = 2;
    jordan::TimeMode mode = jordan::TimeMode::discrete;
    Matrix generator;
    // Optional precomputed factors; validated against the generator.
    std::optional<Matrix> jordan_e, jordan_h, jordan_u;
    std::optional<Matrix> k0;
    int grid_resolution = 24;
    std::optional<double> horizon;
    TolerancePolicy tol;
    std::string output_dir;
    std::uint64_t seed = 0;
};

Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::string& path);

// Build the adapted flow; when the scenario carries a jordan hint, its
// factors must reproduce the generator and commute at tolerance.
jordan::FlowSpec build_flow(const Scenario& s);

// Serializers with pinned formats.
std::string trajectory_csv(const flow::Trajectory& tr);
std::string chain_json(const flow::Chain& chain);
std::string morse_report_json(const jordan::FlowSpec& flow);
std::string decompose_report_json(const jordan::FlowSpec& flow);
std::string basin_map_csv(const jordan::FlowSpec& flow, int grid_resolution, double horizon);
std::string rate_report_json(const jordan::FlowSpec& flow, double horizon);

// Command runners; exit codes: 0 ok, 1 invariant violation, 2 input or
// decomposition error.
int run_decompose(const Scenario& s, std::ostream& out, std::ostream& err);
int run_morse(const Scenario& s, std::ostream& out, std::ostream& err);
int run_simulate(const Scenario& s, std::ostream& out, std::ostream& err);
int run_verify(const Scenario& s, std::ostream& out, std::ostream& err);

}  // namespace kflow::scenario
