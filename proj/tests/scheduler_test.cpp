#include "doctest.h"

#include <stdexcept>
#include <vector>

#include "cellsched/scheduler.hpp"

using namespace cellsched;

TEST_CASE("admissible joint actions pair complementary groups") {
    CHECK(in_admissible_set({{UserGroup::Near, 0}, {UserGroup::Far, 2}}));
    CHECK(in_admissible_set({{UserGroup::Far, 1}, {UserGroup::Near, 0}}));
    CHECK_FALSE(in_admissible_set({{UserGroup::Near, 0}, {UserGroup::Near, 0}}));
    CHECK_FALSE(in_admissible_set({{UserGroup::Far, 0}, {UserGroup::Far, 1}}));
}

TEST_CASE("immediate reward sums the two scheduled beliefs") {
    SystemBeliefState s;
    s.near1 = {0.3};
    s.far1 = {0.1};
    s.near2 = {0.9};
    s.far2 = {0.5};
    CHECK(immediate_reward(s, {{UserGroup::Near, 0}, {UserGroup::Far, 0}}) ==
          doctest::Approx(0.8).epsilon(1e-15));
    CHECK(immediate_reward(s, {{UserGroup::Far, 0}, {UserGroup::Near, 0}}) ==
          doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("greedy selection") {
    CHECK(greedy_select({0.2, 0.9, 0.5}) == 1);
    CHECK(greedy_select({0.5, 0.5}) == 0); // tie to the lowest index
    CHECK(greedy_select({0.7}) == 0);
    CHECK_THROWS_AS(greedy_select({}), std::invalid_argument);
}

TEST_CASE("initial order vector sorts by belief, ties by index") {
    CHECK(initial_order_vector({0.5, 0.9, 0.5}) == std::vector<int>{1, 0, 2});
    CHECK(initial_order_vector({0.1, 0.2, 0.3}) == std::vector<int>{2, 1, 0});
    CHECK(initial_order_vector({0.4}) == std::vector<int>{0});
}

TEST_CASE("order vector dynamics") {
    std::vector<int> order{1, 2, 3};
    CHECK(order_vector_update(order, 1, Arq::Ack) == std::vector<int>{1, 2, 3});
    CHECK(order_vector_update(order, 1, Arq::Nack) == std::vector<int>{2, 3, 1});
    CHECK(order_vector_update({1}, 1, Arq::Nack) == std::vector<int>{1});
    // only the head may have been scheduled
    CHECK_THROWS_AS(order_vector_update(order, 2, Arq::Ack), std::invalid_argument);
    CHECK_THROWS_AS(order_vector_update({}, 0, Arq::Ack), std::invalid_argument);
}

TEST_CASE("breathing pattern parse and lookup") {
    auto p = BreathingPattern::parse("1F,1N");
    REQUIRE(p.cell1_groups.size() == 2);
    CHECK(p.cell1_groups[0] == UserGroup::Far);
    CHECK(p.cell1_groups[1] == UserGroup::Near);
    // serves each group on every second interval
    CHECK(p.cell1_group_at(0) == UserGroup::Far);
    CHECK(p.cell1_group_at(1) == UserGroup::Near);
    CHECK(p.cell1_group_at(2) == UserGroup::Far);
    CHECK(p.cell1_group_at(5) == UserGroup::Near);

    auto q = BreathingPattern::parse("1n");
    CHECK(q.cell1_group_at(7) == UserGroup::Near);

    CHECK_THROWS_AS(BreathingPattern::parse("2F"), std::invalid_argument);
    CHECK_THROWS_AS(BreathingPattern::parse("1F,,1N"), std::invalid_argument);
    CHECK_THROWS_AS(BreathingPattern::parse(""), std::invalid_argument);
}

TEST_CASE("asymmetric policy step") {
    SystemBeliefState s;
    s.near1 = {0.2};
    s.far1 = {0.9};
    s.near2 = {0.5, 0.7};
    s.far2 = {0.4};

    SUBCASE("cell 1 picks its best user, cell 2 complements") {
        auto a = asymmetric_policy_step(s);
        CHECK(a.cell1 == UserRef{UserGroup::Far, 0});
        CHECK(a.cell2 == UserRef{UserGroup::Near, 1});
        CHECK(in_admissible_set(a));
    }
    SUBCASE("cell-1 ties resolve to the lowest combined index") {
        s.near1 = {0.9};
        auto a = asymmetric_policy_step(s);
        CHECK(a.cell1 == UserRef{UserGroup::Near, 0}); // near precedes far
        CHECK(a.cell2 == UserRef{UserGroup::Far, 0});
    }
    SUBCASE("combined flattening is near-first") {
        auto flat = s.cell1_combined();
        CHECK(flat == std::vector<Belief>{0.2, 0.9});
    }
}

TEST_CASE("fixed pattern policy step") {
    SystemBeliefState s;
    s.near1 = {0.6, 0.1};
    s.far1 = {0.3, 0.8};
    s.near2 = {0.6, 0.1};
    s.far2 = {0.2, 0.4};
    auto pattern = BreathingPattern::parse("1F,1N");

    auto a0 = fixed_pattern_policy_step(s, pattern, 0);
    CHECK(a0.cell1 == UserRef{UserGroup::Far, 1});
    CHECK(a0.cell2 == UserRef{UserGroup::Near, 0});

    auto a1 = fixed_pattern_policy_step(s, pattern, 1);
    CHECK(a1.cell1 == UserRef{UserGroup::Near, 0});
    CHECK(a1.cell2 == UserRef{UserGroup::Far, 1});
}

namespace {

// Two-interval trace where every cell-1 pick follows the order vector and
// cell 2 only ever serves its far user.
EpisodeTrace tiny_trace() {
    EpisodeTrace trace;
    trace.counts = {1, 1};
    trace.horizon = 2;

    TraceStep s0;
    s0.interval = 0;
    s0.beliefs_before.near1 = {0.8};
    s0.beliefs_before.far1 = {0.2};
    s0.beliefs_before.near2 = {0.5};
    s0.beliefs_before.far2 = {0.5};
    s0.action = {{UserGroup::Near, 0}, {UserGroup::Far, 0}};
    s0.ack1 = Arq::Ack;
    s0.ack2 = Arq::Nack;

    TraceStep s1 = s0;
    s1.interval = 1;
    s1.beliefs_before.near1 = {0.8};
    s1.beliefs_before.far1 = {0.32};

    trace.steps = {s0, s1};
    return trace;
}

} // namespace

TEST_CASE("axis extraction and order-vector replay") {
    auto trace = tiny_trace();

    SUBCASE("asymmetric layout splits cell 1 from cell-2 groups") {
        auto axes = extract_axes(trace, TraceLayout::Asymmetric);
        REQUIRE(axes.size() == 3);
        CHECK(axes[0].steps.size() == 2); // cell-1 combined axis
        CHECK(axes[0].first_beliefs == std::vector<Belief>{0.8, 0.2});
        CHECK(axes[1].steps.empty()); // cell-2 near group is never served
        CHECK(axes[2].steps.size() == 2);
    }
    SUBCASE("a conforming trace passes the round-robin check") {
        CHECK(greedy_equals_round_robin_check(trace, TraceLayout::Asymmetric));
    }
    SUBCASE("deviating from the order-vector head fails the check") {
        auto bad = trace;
        bad.steps[1].action.cell1 = {UserGroup::Far, 0}; // head after an ACK is still near-0
        bad.steps[1].action.cell2 = {UserGroup::Near, 0};
        CHECK_FALSE(greedy_equals_round_robin_check(bad, TraceLayout::Asymmetric));
    }
    SUBCASE("per-group layout yields four axes") {
        auto axes = extract_axes(trace, TraceLayout::PerGroup);
        REQUIRE(axes.size() == 4);
        CHECK(axes[0].steps.size() == 2); // cell-1 near
        CHECK(axes[1].steps.empty());     // cell-1 far
        CHECK(axes[2].steps.empty());     // cell-2 near
        CHECK(axes[3].steps.size() == 2); // cell-2 far
    }
}
