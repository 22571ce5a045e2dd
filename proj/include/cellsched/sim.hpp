#pragma once

#include <cstdint>
#include <iosfwd>
#include <mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cellsched/dp.hpp"
#include "cellsched/markov.hpp"
#include "cellsched/rng.hpp"
#include "cellsched/scheduler.hpp"
#include "cellsched/whittle.hpp"

namespace cellsched {

enum class PolicyId {
    Greedy,    // cell 1 greedy over all users, cell 2 complements
    Pattern,   // both cells greedy within a fixed breathing pattern
    Random,    // uniform over the admissible set
    Index,     // activate the paired project with the largest W*
    DpOptimal, // replay a solved value table
};

PolicyId parse_policy_id(const std::string& name);
std::string policy_id_name(PolicyId id);

// Shared W* memo for the index policy. One cache per (chain, search settings)
// context; the key is the sorted belief pair plus the lookahead.
class IndexCache {
  public:
    double get(const TransitionMatrix& chain, double pi1, double pi2, int t,
               const SearchParams& search);
    std::size_t size() const;

  private:
    struct Key {
        double hi;
        double lo;
        int t;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const;
    };
    mutable std::mutex mutex_;
    std::unordered_map<Key, double, KeyHash> map_;
};

struct EpisodeConfig {
    TransitionMatrix chain{0.5, 0.5, 0.5, 0.5};
    UserCounts counts{1, 1};
    int horizon = 1;
    // Empty vectors mean "stationary belief for every user in the group".
    std::vector<Belief> init_near1;
    std::vector<Belief> init_far1;
    std::vector<Belief> init_near2;
    std::vector<Belief> init_far2;
    std::uint64_t seed = 0;
    PolicyId policy = PolicyId::Greedy;
    BreathingPattern pattern; // Pattern policy only
    // Permanent project pairings (Index policy): near1[i] with far2[pair_near1[i]]
    // and far1[k] with near2[pair_far1[k]]. Empty means identity; requires
    // equal near/far counts.
    std::vector<int> pair_near1;
    std::vector<int> pair_far1;
    int index_horizon = 5; // index policy lookahead, clamped to remaining
    SearchParams search;
};

// Resolved per-group initial beliefs with `remaining` set to the horizon.
SystemBeliefState initial_beliefs(const EpisodeConfig& config);

// Resources some policies need beyond the config.
struct PolicyRuntime {
    const DpTable* table = nullptr;    // DpOptimal
    IndexCache* index_cache = nullptr; // Index; a private cache is used if null
};

// One episode: true per-user chains, ARQ equal to the scheduled users' true
// states, belief updates each interval. Deterministic in (seed, episode_id).
EpisodeTrace run_episode(const EpisodeConfig& config, std::uint64_t episode_id,
                         const PolicyRuntime& runtime = {});

// Same loop, but ARQ comes from the given per-interval (cell 1, cell 2) pairs
// and the recorded true states mirror the forced feedback. Drives exhaustive
// structure checks over all feedback realizations.
EpisodeTrace run_forced_episode(const EpisodeConfig& config,
                                const std::vector<std::pair<Arq, Arq>>& feedback,
                                const PolicyRuntime& runtime = {});

struct ThroughputEstimate {
    double mean = 0.0;      // per-interval reward averaged over episodes
    double std_error = 0.0; // sample stderr of the episode means
    int episodes = 0;
    int horizon = 0;
};

ThroughputEstimate estimate_throughput(const EpisodeConfig& config, int episodes, int workers = 1,
                                       const PolicyRuntime& runtime = {});

struct ComparisonReport {
    ThroughputEstimate a;
    ThroughputEstimate b;
    double mean_diff = 0.0; // paired per-episode differences, a minus b
    double std_error_diff = 0.0;
};

// Common-random-numbers comparison: configs must agree on everything except
// the policy selection fields.
ComparisonReport compare_policies(const EpisodeConfig& config_a, const EpisodeConfig& config_b,
                                  int episodes, int workers = 1,
                                  const PolicyRuntime& runtime_a = {},
                                  const PolicyRuntime& runtime_b = {});

// Columns: interval,cell1_user,cell2_user,ack1,ack2,reward.
void write_trace_csv(const EpisodeTrace& trace, std::ostream& out);

enum class FigureId { Fig4, Fig5, Fig6 };

FigureId parse_figure_id(const std::string& name);

struct FigureParams {
    TransitionMatrix chain{0.5, 0.5, 0.5, 0.5};
    int horizon = 5;
    int grid_n = 21;
    SearchParams search;
    int workers = 1;
};

FigureParams default_figure_params(FigureId which);

// Fig4: subsidy-gap curves g(W) per belief state, with each state's crossing
// count. Fig5/Fig6: full index sweep, scatter of W* against the belief sum.
void emit_figure_data(FigureId which, const FigureParams& params, std::ostream& out);

} // namespace cellsched
