#pragma once

#include <string>
#include <vector>

#include "cellsched/markov.hpp"
#include "cellsched/phy.hpp"

namespace cellsched {

struct UserRef {
    UserGroup group;
    int index;

    bool operator==(const UserRef&) const = default;
};

// One interval's joint pick. Cell breathing admits only complementary groups:
// (near, far) or (far, near).
struct JointAction {
    UserRef cell1;
    UserRef cell2;

    bool operator==(const JointAction&) const = default;
};

bool in_admissible_set(const JointAction& a);

// Near/far user counts, identical in both cells.
struct UserCounts {
    int near;
    int far;

    int per_cell() const { return near + far; }
};

// Belief vectors for both cells plus intervals remaining.
struct SystemBeliefState {
    std::vector<Belief> near1;
    std::vector<Belief> far1;
    std::vector<Belief> near2;
    std::vector<Belief> far2;
    int remaining = 0;

    const std::vector<Belief>& group(int cell, UserGroup g) const;
    std::vector<Belief>& group(int cell, UserGroup g);

    // Cell-1 beliefs flattened as [near..., far...] for the isolated-cell view.
    std::vector<Belief> cell1_combined() const;
};

// Which group cell 1 serves at each interval; cell 2 always complements.
// Repeats with the period of the stored sequence.
struct BreathingPattern {
    std::vector<UserGroup> cell1_groups;

    UserGroup cell1_group_at(int interval) const;
    // Parses a repeating comma list over {1F, 1N}, e.g. "1F,1N".
    static BreathingPattern parse(const std::string& text);
};

// Expected interval reward: sum of the two scheduled users' beliefs.
double immediate_reward(const SystemBeliefState& state, const JointAction& action);

// Argmax of the beliefs; ties go to the lowest index.
int greedy_select(const std::vector<Belief>& beliefs);

// User indices sorted by (belief desc, index asc). Head = greedy pick.
std::vector<int> initial_order_vector(const std::vector<Belief>& beliefs);

// NACK moves the head to the tail; ACK keeps the order. `scheduled` must be
// the current head.
std::vector<int> order_vector_update(const std::vector<int>& order, int scheduled, Arq feedback);

// Cell 1 greedy over all its users (near indices first, then far, ties to the
// lowest combined index); cell 2 greedy within the complementary group.
JointAction asymmetric_policy_step(const SystemBeliefState& state);

// Both cells greedy within the groups the pattern dictates at `interval`.
JointAction fixed_pattern_policy_step(const SystemBeliefState& state,
                                      const BreathingPattern& pattern, int interval);

// ---- episode traces and the round-robin structure check ----

struct TraceStep {
    int interval = 0;
    JointAction action{};
    ChannelState true1 = ChannelState::Off; // scheduled cell-1 user's true state
    ChannelState true2 = ChannelState::Off;
    Arq ack1 = Arq::Nack;
    Arq ack2 = Arq::Nack;
    int reward = 0;
    SystemBeliefState beliefs_before;
};

struct EpisodeTrace {
    UserCounts counts{0, 0};
    int horizon = 0;
    std::vector<TraceStep> steps;
    int total_reward = 0;
};

// One scheduling axis (a cell's full user set, or one cell-group on its
// sporadic instants) flattened out of a trace.
struct AxisStep {
    int selected;
    Arq feedback;
};

struct AxisTrace {
    std::vector<Belief> first_beliefs; // at the axis's first instant
    std::vector<AxisStep> steps;
};

// Replays the rotate-on-NACK order dynamics from the axis's initial order and
// checks every recorded selection equals the order-vector head. No belief
// values are consulted after the initial order is formed.
bool greedy_matches_order_vector(const AxisTrace& axis);

enum class TraceLayout {
    Asymmetric, // cell-1 combined axis + cell-2 per-group sporadic axes
    PerGroup,   // four (cell, group) sporadic axes (fixed-pattern policies)
};

std::vector<AxisTrace> extract_axes(const EpisodeTrace& trace, TraceLayout layout);

// True iff every axis of the trace passes greedy_matches_order_vector.
bool greedy_equals_round_robin_check(const EpisodeTrace& trace, TraceLayout layout);

} // namespace cellsched
