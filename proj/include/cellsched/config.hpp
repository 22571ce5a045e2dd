#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace cellsched {

// Flat INI-style run configuration. Unknown sections or keys are hard errors,
// and `seed` is mandatory: reproducibility is part of the contract.
struct RunConfig {
    // [run]
    std::uint64_t seed = 0;
    bool seed_set = false;
    int workers = 1;
    std::string out_dir = ".";

    // [chain]
    double p = 0.0;
    double r = 0.0;
    bool chain_set = false;

    // [cells]
    int near = 1;
    int far = 1;

    // [init] per-group initial beliefs; empty list = stationary for everyone
    std::vector<double> init_near1;
    std::vector<double> init_far1;
    std::vector<double> init_near2;
    std::vector<double> init_far2;

    // [sim]
    std::string scenario = "asymmetric"; // asymmetric | fixed-pattern | rmab-v
    std::string policy;                  // empty = the scenario's natural policy
    std::string baseline;                // non-empty = paired comparison run
    int episodes = 1000;
    int sim_horizon = 100;
    bool traces = false;
    int index_horizon = 5;
    std::string pattern; // e.g. "1F,1N"

    // [dp]
    std::string dp_mode = "two-cell"; // two-cell | pattern | single-group
    int dp_horizon = 3;
    int dp_users = 2;                // single-group mode
    std::vector<int> dp_gaps;        // single-group; empty = all 1
    std::vector<double> dp_init;     // single-group; empty = stationary
    std::string dp_feedback = "reset-only"; // reset-only | reset-and-decay
    std::uint64_t node_budget = 10'000'000;
    bool check_greedy = false;

    // [whittle]
    int whittle_horizon = 5;
    int grid_n = 21;
    double grid_step = 1e-3;
    double tolerance = 1e-9;
    bool widened = false;

    // [condition]
    int cond_users = 2;
    int cond_horizon = 3;
    std::vector<int> cond_gaps; // empty = all 1
};

RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

// Canonical form: every effective value, stable ordering, round-trip exact.
// parse(serialize(c)) reproduces c field for field.
void serialize_config(const RunConfig& config, std::ostream& out);

} // namespace cellsched
