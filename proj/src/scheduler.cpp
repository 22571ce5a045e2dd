#include "cellsched/scheduler.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace cellsched {

bool in_admissible_set(const JointAction& a) {
    return a.cell1.group != a.cell2.group;
}

const std::vector<Belief>& SystemBeliefState::group(int cell, UserGroup g) const {
    if (cell == 1)
        return g == UserGroup::Near ? near1 : far1;
    if (cell == 2)
        return g == UserGroup::Near ? near2 : far2;
    throw std::invalid_argument("cell must be 1 or 2");
}

std::vector<Belief>& SystemBeliefState::group(int cell, UserGroup g) {
    return const_cast<std::vector<Belief>&>(std::as_const(*this).group(cell, g));
}

std::vector<Belief> SystemBeliefState::cell1_combined() const {
    std::vector<Belief> all = near1;
    all.insert(all.end(), far1.begin(), far1.end());
    return all;
}

UserGroup BreathingPattern::cell1_group_at(int interval) const {
    if (cell1_groups.empty())
        throw std::invalid_argument("empty breathing pattern");
    if (interval < 0)
        throw std::invalid_argument("negative interval");
    return cell1_groups[interval % cell1_groups.size()];
}

BreathingPattern BreathingPattern::parse(const std::string& text) {
    BreathingPattern p;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto comma = text.find(',', pos);
        std::string tok = text.substr(pos, comma == std::string::npos ? std::string::npos
                                                                      : comma - pos);
        if (tok == "1F" || tok == "1f")
            p.cell1_groups.push_back(UserGroup::Far);
        else if (tok == "1N" || tok == "1n")
            p.cell1_groups.push_back(UserGroup::Near);
        else
            throw std::invalid_argument("bad pattern token '" + tok + "' (want 1F or 1N)");
        if (comma == std::string::npos)
            break;
        pos = comma + 1;
    }
    return p;
}

double immediate_reward(const SystemBeliefState& state, const JointAction& action) {
    if (!in_admissible_set(action))
        throw std::invalid_argument("action violates cell breathing");
    const auto& g1 = state.group(1, action.cell1.group);
    const auto& g2 = state.group(2, action.cell2.group);
    if (action.cell1.index < 0 || action.cell1.index >= static_cast<int>(g1.size()) ||
        action.cell2.index < 0 || action.cell2.index >= static_cast<int>(g2.size()))
        throw std::out_of_range("scheduled user index out of range");
    return g1[action.cell1.index] + g2[action.cell2.index];
}

int greedy_select(const std::vector<Belief>& beliefs) {
    if (beliefs.empty())
        throw std::invalid_argument("greedy_select on empty belief vector");
    int best = 0;
    for (int i = 1; i < static_cast<int>(beliefs.size()); ++i)
        if (beliefs[i] > beliefs[best])
            best = i;
    return best;
}

std::vector<int> initial_order_vector(const std::vector<Belief>& beliefs) {
    std::vector<int> order(beliefs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return beliefs[a] > beliefs[b]; });
    return order;
}

std::vector<int> order_vector_update(const std::vector<int>& order, int scheduled, Arq feedback) {
    if (order.empty())
        throw std::invalid_argument("empty order vector");
    if (order.front() != scheduled)
        throw std::invalid_argument("scheduled user is not the order-vector head");
    if (feedback == Arq::Ack)
        return order;
    std::vector<int> next(order.begin() + 1, order.end());
    next.push_back(order.front());
    return next;
}

JointAction asymmetric_policy_step(const SystemBeliefState& state) {
    std::vector<Belief> combined = state.cell1_combined();
    int pick = greedy_select(combined);
    int n1 = static_cast<int>(state.near1.size());
    UserRef c1 = pick < n1 ? UserRef{UserGroup::Near, pick}
                           : UserRef{UserGroup::Far, pick - n1};
    UserGroup g2 = (c1.group == UserGroup::Near) ? UserGroup::Far : UserGroup::Near;
    UserRef c2{g2, greedy_select(state.group(2, g2))};
    return JointAction{c1, c2};
}

JointAction fixed_pattern_policy_step(const SystemBeliefState& state,
                                      const BreathingPattern& pattern, int interval) {
    UserGroup g1 = pattern.cell1_group_at(interval);
    UserGroup g2 = (g1 == UserGroup::Near) ? UserGroup::Far : UserGroup::Near;
    UserRef c1{g1, greedy_select(state.group(1, g1))};
    UserRef c2{g2, greedy_select(state.group(2, g2))};
    return JointAction{c1, c2};
}

bool greedy_matches_order_vector(const AxisTrace& axis) {
    if (axis.steps.empty())
        return true;
    std::vector<int> order = initial_order_vector(axis.first_beliefs);
    for (const auto& step : axis.steps) {
        if (order.front() != step.selected)
            return false;
        order = order_vector_update(order, order.front(), step.feedback);
    }
    return true;
}

namespace {

AxisTrace cell_group_axis(const EpisodeTrace& trace, int cell, UserGroup g) {
    AxisTrace axis;
    for (const auto& step : trace.steps) {
        UserRef ref = (cell == 1) ? step.action.cell1 : step.action.cell2;
        if (ref.group != g)
            continue;
        if (axis.steps.empty())
            axis.first_beliefs = step.beliefs_before.group(cell, g);
        axis.steps.push_back({ref.index, cell == 1 ? step.ack1 : step.ack2});
    }
    return axis;
}

AxisTrace cell1_combined_axis(const EpisodeTrace& trace) {
    AxisTrace axis;
    for (const auto& step : trace.steps) {
        if (axis.steps.empty())
            axis.first_beliefs = step.beliefs_before.cell1_combined();
        int combined = step.action.cell1.group == UserGroup::Near
                           ? step.action.cell1.index
                           : trace.counts.near + step.action.cell1.index;
        axis.steps.push_back({combined, step.ack1});
    }
    return axis;
}

} // namespace

std::vector<AxisTrace> extract_axes(const EpisodeTrace& trace, TraceLayout layout) {
    std::vector<AxisTrace> axes;
    if (layout == TraceLayout::Asymmetric) {
        axes.push_back(cell1_combined_axis(trace));
        axes.push_back(cell_group_axis(trace, 2, UserGroup::Near));
        axes.push_back(cell_group_axis(trace, 2, UserGroup::Far));
    } else {
        for (int cell : {1, 2})
            for (UserGroup g : {UserGroup::Near, UserGroup::Far})
                axes.push_back(cell_group_axis(trace, cell, g));
    }
    return axes;
}

bool greedy_equals_round_robin_check(const EpisodeTrace& trace, TraceLayout layout) {
    for (const auto& axis : extract_axes(trace, layout))
        if (!greedy_matches_order_vector(axis))
            return false;
    return true;
}

} // namespace cellsched
