#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <unordered_map>
#include <vector>

#include "cellsched/markov.hpp"
#include "cellsched/scheduler.hpp"

namespace cellsched {

// A reachable belief written as T^k applied to a base, where the base is the
// user's own initial belief, p, or r. Exact node identity, no epsilons.
struct BeliefSym {
    enum class Base : std::uint8_t { Init = 0, P = 1, R = 2 };
    Base base = Base::Init;
    std::uint8_t k = 0;
};

struct DpUserSpec {
    int cell;        // 1 or 2 (0 in single-group mode)
    UserGroup group; // grouping within the cell
    double initial_belief;
};

// What the just-observed user's belief becomes at its next scheduling instant
// when instants are `gap` raw intervals apart.
enum class FeedbackPropagation {
    ResetOnly,     // p or r, regardless of the spacing
    ResetAndDecay, // p or r pushed through the remaining gap-1 propagation steps
};

struct DpInstance {
    enum class Mode { TwoCellFree, TwoCellPattern, SingleGroup };

    TransitionMatrix chain;
    Mode mode;
    int horizon;
    std::vector<DpUserSpec> users; // cell1 near, cell1 far, cell2 near, cell2 far order
    BreathingPattern pattern;      // TwoCellPattern only
    std::vector<int> gaps;         // SingleGroup: horizon-1 forward spacings
    FeedbackPropagation feedback = FeedbackPropagation::ResetOnly;
    std::uint64_t node_budget = 10'000'000;

    int user_count() const { return static_cast<int>(users.size()); }
    // Position of a (cell, group, index) user in the flat list; -1 if absent.
    int user_pos(int cell, UserGroup group, int index) const;
    UserRef user_ref(int pos) const;
};

DpInstance make_two_cell_instance(const TransitionMatrix& chain, const SystemBeliefState& initial,
                                  int horizon);
DpInstance make_pattern_instance(const TransitionMatrix& chain, const SystemBeliefState& initial,
                                 int horizon, const BreathingPattern& pattern);
DpInstance make_single_group_instance(const TransitionMatrix& chain,
                                      const std::vector<Belief>& initial, int horizon,
                                      const std::vector<int>& gaps,
                                      FeedbackPropagation feedback = FeedbackPropagation::ResetOnly);

// An action as positions into the instance's user list. Single-group actions
// leave `secondary` at -1.
struct DpAction {
    int primary = -1;
    int secondary = -1;

    bool operator==(const DpAction&) const = default;
};

struct DpNodeKey {
    std::array<std::uint64_t, 2> sym = {0, 0};
    std::uint32_t depth = 0;

    bool operator==(const DpNodeKey&) const = default;
};

struct DpNodeKeyHash {
    std::size_t operator()(const DpNodeKey& k) const {
        std::uint64_t h = mix64(k.sym[0] ^ mix64(k.sym[1] + k.depth));
        return static_cast<std::size_t>(h);
    }
};

struct DpNodeInfo {
    double value = 0.0;
    DpAction action;
};

// Value-to-go and chosen action at every reachable node.
class DpTable {
  public:
    DpTable(DpInstance instance) : instance_(std::move(instance)) {}

    const DpInstance& instance() const { return instance_; }
    double root_value() const { return root_value_; }
    const DpNodeKey& root_key() const { return root_key_; }
    std::size_t node_count() const { return nodes_.size(); }

    const DpNodeInfo* find(const DpNodeKey& key) const;
    const std::unordered_map<DpNodeKey, DpNodeInfo, DpNodeKeyHash>& nodes() const {
        return nodes_;
    }

    void write_csv(std::ostream& out) const;

  private:
    friend class DpSolver;
    DpInstance instance_;
    std::unordered_map<DpNodeKey, DpNodeInfo, DpNodeKeyHash> nodes_;
    DpNodeKey root_key_;
    double root_value_ = 0.0;
};

// Numeric snapshot of a node handed to policy callables.
struct DpStateView {
    int depth = 0;         // instants remaining, current one included
    int forward_index = 0; // 0-based instant position from the start
    const DpInstance* instance = nullptr;
    std::vector<double> beliefs; // per user-list position
};

using DpPolicyFn = std::function<DpAction(const DpStateView&)>;

// Exact optimal value by backward recursion over ARQ outcome branches.
DpTable solve_optimal(const DpInstance& instance);

// Exact expected value of a fixed deterministic policy, same recursion.
DpTable evaluate_policy(const DpInstance& instance, const DpPolicyFn& policy);

// Replays `table`'s stored actions node-by-node; value must reproduce
// table.root_value() when `table` came from solve_optimal on `instance`.
DpTable evaluate_table_policy(const DpInstance& instance, const DpTable& table);

// Greedy policy for the instance's mode: argmax beliefs, cell 2 complements,
// pattern respected in TwoCellPattern mode. Ties to the lowest position.
DpPolicyFn greedy_dp_policy();

// Walks a solved table's stored actions as feedback arrives one interval at a
// time; lets a simulation replay the tabulated policy. ack2 is ignored for
// single-group instances.
class TableFollower {
  public:
    explicit TableFollower(const DpTable& table);

    const DpAction& action() const;
    void advance(Arq ack1, Arq ack2);
    int remaining() const { return static_cast<int>(key_.depth); }

  private:
    const DpTable* table_;
    DpNodeKey key_;
};

// True iff table values are invariant (bit-exact) under every transposition
// of same-(cell, group) users, with their symbolic beliefs carried along.
bool value_symmetry_check(const DpTable& table);

// Max over (m, n, Y, X) of the conditioned greedy-rollout value difference on
// the sporadic axis; -inf when n_users < 2 or horizon < 2. The greedy policy
// maximizes sporadic-axis throughput when the result is <= 1.
double sufficient_condition_check(const TransitionMatrix& chain, int n_users, int horizon,
                                  const std::vector<int>& gaps);

} // namespace cellsched
