#include "cellsched/dp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "cellsched/errors.hpp"

namespace cellsched {

namespace {

constexpr int kMaxUsers = 16;
constexpr std::uint8_t kMaxSymK = 63;

std::uint8_t pack_sym(BeliefSym s) {
    return static_cast<std::uint8_t>(static_cast<std::uint8_t>(s.base) | (s.k << 2));
}

BeliefSym unpack_sym(std::uint8_t byte) {
    return BeliefSym{static_cast<BeliefSym::Base>(byte & 0x3),
                     static_cast<std::uint8_t>(byte >> 2)};
}

std::uint8_t key_byte(const DpNodeKey& key, int user) {
    return static_cast<std::uint8_t>(key.sym[user / 8] >> (8 * (user % 8)));
}

void set_key_byte(DpNodeKey& key, int user, std::uint8_t byte) {
    std::uint64_t& word = key.sym[user / 8];
    int shift = 8 * (user % 8);
    word = (word & ~(std::uint64_t{0xff} << shift)) | (std::uint64_t{byte} << shift);
}

std::string sym_to_string(BeliefSym s) {
    const char* base = s.base == BeliefSym::Base::Init ? "I" : s.base == BeliefSym::Base::P ? "P" : "R";
    return base + std::to_string(int(s.k));
}

} // namespace

int DpInstance::user_pos(int cell, UserGroup group, int index) const {
    int seen = 0;
    for (int i = 0; i < user_count(); ++i) {
        if (users[i].cell == cell && users[i].group == group) {
            if (seen == index)
                return i;
            ++seen;
        }
    }
    return -1;
}

UserRef DpInstance::user_ref(int pos) const {
    const DpUserSpec& u = users.at(pos);
    int index = 0;
    for (int i = 0; i < pos; ++i)
        if (users[i].cell == u.cell && users[i].group == u.group)
            ++index;
    return UserRef{u.group, index};
}

namespace {

void append_group(std::vector<DpUserSpec>& users, int cell, UserGroup group,
                  const std::vector<Belief>& beliefs) {
    for (double b : beliefs) {
        if (!(b >= 0.0 && b <= 1.0))
            throw std::invalid_argument("initial belief out of [0,1]");
        users.push_back(DpUserSpec{cell, group, b});
    }
}

DpInstance make_two_cell_base(const TransitionMatrix& chain, const SystemBeliefState& initial,
                              int horizon, DpInstance::Mode mode) {
    if (horizon < 1)
        throw std::invalid_argument("horizon must be >= 1");
    if (initial.near1.empty() || initial.far1.empty() || initial.near2.empty() ||
        initial.far2.empty())
        throw std::invalid_argument("two-cell instance needs users in every group");
    DpInstance inst{chain, mode, horizon, {}, {}, {}, FeedbackPropagation::ResetOnly};
    append_group(inst.users, 1, UserGroup::Near, initial.near1);
    append_group(inst.users, 1, UserGroup::Far, initial.far1);
    append_group(inst.users, 2, UserGroup::Near, initial.near2);
    append_group(inst.users, 2, UserGroup::Far, initial.far2);
    if (inst.user_count() > kMaxUsers)
        throw BudgetError("too many users for the node encoding");
    return inst;
}

} // namespace

DpInstance make_two_cell_instance(const TransitionMatrix& chain, const SystemBeliefState& initial,
                                  int horizon) {
    return make_two_cell_base(chain, initial, horizon, DpInstance::Mode::TwoCellFree);
}

DpInstance make_pattern_instance(const TransitionMatrix& chain, const SystemBeliefState& initial,
                                 int horizon, const BreathingPattern& pattern) {
    DpInstance inst = make_two_cell_base(chain, initial, horizon, DpInstance::Mode::TwoCellPattern);
    if (pattern.cell1_groups.empty())
        throw std::invalid_argument("empty breathing pattern");
    inst.pattern = pattern;
    return inst;
}

DpInstance make_single_group_instance(const TransitionMatrix& chain,
                                      const std::vector<Belief>& initial, int horizon,
                                      const std::vector<int>& gaps,
                                      FeedbackPropagation feedback) {
    if (horizon < 1)
        throw std::invalid_argument("horizon must be >= 1");
    if (initial.empty())
        throw std::invalid_argument("single-group instance needs at least one user");
    if (static_cast<int>(gaps.size()) != horizon - 1)
        throw std::invalid_argument("gap vector must have horizon-1 entries");
    for (int g : gaps)
        if (g < 1)
            throw std::invalid_argument("gaps must be >= 1");
    DpInstance inst{chain, DpInstance::Mode::SingleGroup, horizon, {}, {}, gaps, feedback};
    append_group(inst.users, 0, UserGroup::Near, initial);
    if (inst.user_count() > kMaxUsers)
        throw BudgetError("too many users for the node encoding");
    return inst;
}

const DpNodeInfo* DpTable::find(const DpNodeKey& key) const {
    auto it = nodes_.find(key);
    return it == nodes_.end() ? nullptr : &it->second;
}

namespace {

std::string action_to_string(const DpInstance& inst, const DpAction& a) {
    if (inst.mode == DpInstance::Mode::SingleGroup)
        return "u" + std::to_string(a.primary);
    auto render = [&](int cell, int pos) {
        UserRef ref = inst.user_ref(pos);
        return "c" + std::to_string(cell) + (ref.group == UserGroup::Near ? "n" : "f") +
               std::to_string(ref.index);
    };
    return render(1, a.primary) + "+" + render(2, a.secondary);
}

} // namespace

namespace {

// Steps a node key one instant forward given the action and ARQ outcome(s).
DpNodeKey step_key(const DpInstance& inst, const DpNodeKey& key, int forward,
                   const DpAction& action, bool ack1, bool ack2) {
    DpNodeKey next = key;
    next.depth = key.depth - 1;
    int step = 1;
    std::uint8_t observed_k = 0;
    if (inst.mode == DpInstance::Mode::SingleGroup) {
        step = inst.gaps.empty() ? 1 : inst.gaps[forward];
        if (inst.feedback == FeedbackPropagation::ResetAndDecay)
            observed_k = static_cast<std::uint8_t>(step - 1);
    }
    for (int u = 0; u < inst.user_count(); ++u) {
        BeliefSym s = unpack_sym(key_byte(next, u));
        if (u == action.primary || u == action.secondary) {
            bool ack = (u == action.primary) ? ack1 : ack2;
            s = BeliefSym{ack ? BeliefSym::Base::P : BeliefSym::Base::R, observed_k};
        } else {
            if (s.k + step > kMaxSymK)
                throw BudgetError("symbolic propagation exceeds the node encoding");
            s.k = static_cast<std::uint8_t>(s.k + step);
        }
        set_key_byte(next, u, pack_sym(s));
    }
    return next;
}

} // namespace

// Shared backward recursion for the optimal, callable-policy, and
// table-replay modes.
class DpSolver {
  public:
    enum class Mode { Optimal, Policy, Replay };

    DpSolver(const DpInstance& inst, Mode mode, const DpPolicyFn* policy, const DpTable* replay)
        : inst_(inst), mode_(mode), policy_(policy), replay_(replay), table_(inst) {
        for (int i = 0; i < inst_.user_count(); ++i) {
            if (inst_.users[i].cell == 1)
                (inst_.users[i].group == UserGroup::Near ? near1_ : far1_).push_back(i);
            else if (inst_.users[i].cell == 2)
                (inst_.users[i].group == UserGroup::Near ? near2_ : far2_).push_back(i);
        }
    }

    DpTable run() {
        DpNodeKey root;
        root.depth = static_cast<std::uint32_t>(inst_.horizon);
        for (int u = 0; u < inst_.user_count(); ++u)
            set_key_byte(root, u, pack_sym(BeliefSym{BeliefSym::Base::Init, 0}));
        table_.root_key_ = root;
        table_.root_value_ = node_value(root);
        return std::move(table_);
    }

  private:
    double belief_of(const DpNodeKey& key, int user) const {
        BeliefSym s = unpack_sym(key_byte(key, user));
        double v = 0.0;
        switch (s.base) {
        case BeliefSym::Base::Init: v = inst_.users[user].initial_belief; break;
        case BeliefSym::Base::P: v = inst_.chain.p; break;
        case BeliefSym::Base::R: v = inst_.chain.r; break;
        }
        for (int i = 0; i < s.k; ++i)
            v = t_operator(v, inst_.chain);
        return v;
    }

    std::vector<DpAction> actions_at(int forward) const {
        std::vector<DpAction> out;
        if (inst_.mode == DpInstance::Mode::SingleGroup) {
            for (int u = 0; u < inst_.user_count(); ++u)
                out.push_back(DpAction{u, -1});
            return out;
        }
        bool far_first = true, near_first = true;
        if (inst_.mode == DpInstance::Mode::TwoCellPattern) {
            UserGroup g1 = inst_.pattern.cell1_group_at(forward);
            far_first = (g1 == UserGroup::Far);
            near_first = (g1 == UserGroup::Near);
        }
        if (near_first)
            for (int a : near1_)
                for (int b : far2_)
                    out.push_back(DpAction{a, b});
        if (far_first)
            for (int a : far1_)
                for (int b : near2_)
                    out.push_back(DpAction{a, b});
        return out;
    }

    DpNodeKey successor(const DpNodeKey& key, int forward, const DpAction& action, bool ack1,
                        bool ack2) const {
        return step_key(inst_, key, forward, action, ack1, ack2);
    }

    void validate_action(const DpAction& a, int forward) const {
        auto fail = [] { throw std::invalid_argument("policy emitted an inadmissible action"); };
        if (inst_.mode == DpInstance::Mode::SingleGroup) {
            if (a.primary < 0 || a.primary >= inst_.user_count() || a.secondary != -1)
                fail();
            return;
        }
        if (a.primary < 0 || a.primary >= inst_.user_count() || a.secondary < 0 ||
            a.secondary >= inst_.user_count())
            fail();
        const DpUserSpec& u1 = inst_.users[a.primary];
        const DpUserSpec& u2 = inst_.users[a.secondary];
        if (u1.cell != 1 || u2.cell != 2 || u1.group == u2.group)
            fail();
        if (inst_.mode == DpInstance::Mode::TwoCellPattern &&
            u1.group != inst_.pattern.cell1_group_at(forward))
            fail();
    }

    double action_value(const DpNodeKey& key, int forward, const DpAction& action) {
        if (inst_.mode == DpInstance::Mode::SingleGroup) {
            double b = belief_of(key, action.primary);
            double v = b;
            if (key.depth > 1) {
                v += b * node_value(successor(key, forward, action, true, true));
                v += (1.0 - b) * node_value(successor(key, forward, action, false, false));
            }
            return v;
        }
        double b1 = belief_of(key, action.primary);
        double b2 = belief_of(key, action.secondary);
        double v = b1 + b2;
        if (key.depth > 1) {
            v += b1 * b2 * node_value(successor(key, forward, action, true, true));
            v += b1 * (1.0 - b2) * node_value(successor(key, forward, action, true, false));
            v += (1.0 - b1) * b2 * node_value(successor(key, forward, action, false, true));
            v += (1.0 - b1) * (1.0 - b2) * node_value(successor(key, forward, action, false, false));
        }
        return v;
    }

    double node_value(const DpNodeKey& key) {
        auto it = table_.nodes_.find(key);
        if (it != table_.nodes_.end())
            return it->second.value;

        int forward = inst_.horizon - static_cast<int>(key.depth);
        DpNodeInfo info;
        if (mode_ == Mode::Optimal) {
            double best = -std::numeric_limits<double>::infinity();
            DpAction best_action;
            for (const DpAction& a : actions_at(forward)) {
                double v = action_value(key, forward, a);
                if (v > best) {
                    best = v;
                    best_action = a;
                }
            }
            if (!std::isfinite(best))
                throw std::invalid_argument("no admissible action at a reachable node");
            info = DpNodeInfo{best, best_action};
        } else {
            DpAction a;
            if (mode_ == Mode::Replay) {
                const DpNodeInfo* stored = replay_->find(key);
                if (!stored)
                    throw std::logic_error("table replay hit a node absent from the table");
                a = stored->action;
            } else {
                DpStateView view;
                view.depth = static_cast<int>(key.depth);
                view.forward_index = forward;
                view.instance = &inst_;
                view.beliefs.resize(inst_.user_count());
                for (int u = 0; u < inst_.user_count(); ++u)
                    view.beliefs[u] = belief_of(key, u);
                a = (*policy_)(view);
            }
            validate_action(a, forward);
            info = DpNodeInfo{action_value(key, forward, a), a};
        }

        if (table_.nodes_.size() >= inst_.node_budget)
            throw BudgetError("dp node budget exceeded (" +
                              std::to_string(inst_.node_budget) + " nodes)");
        table_.nodes_.emplace(key, info);
        return info.value;
    }

    const DpInstance& inst_;
    Mode mode_;
    const DpPolicyFn* policy_;
    const DpTable* replay_;
    DpTable table_;
    std::vector<int> near1_, far1_, near2_, far2_;
};

DpTable solve_optimal(const DpInstance& instance) {
    return DpSolver(instance, DpSolver::Mode::Optimal, nullptr, nullptr).run();
}

DpTable evaluate_policy(const DpInstance& instance, const DpPolicyFn& policy) {
    return DpSolver(instance, DpSolver::Mode::Policy, &policy, nullptr).run();
}

DpTable evaluate_table_policy(const DpInstance& instance, const DpTable& table) {
    return DpSolver(instance, DpSolver::Mode::Replay, nullptr, &table).run();
}

TableFollower::TableFollower(const DpTable& table) : table_(&table), key_(table.root_key()) {}

const DpAction& TableFollower::action() const {
    const DpNodeInfo* info = table_->find(key_);
    if (!info)
        throw std::logic_error("table walk hit a node absent from the table");
    return info->action;
}

void TableFollower::advance(Arq ack1, Arq ack2) {
    if (key_.depth == 0)
        throw std::logic_error("advancing a finished table walk");
    const DpAction& a = action();
    const int forward = table_->instance().horizon - static_cast<int>(key_.depth);
    key_ = step_key(table_->instance(), key_, forward, a, ack1 == Arq::Ack, ack2 == Arq::Ack);
}

DpPolicyFn greedy_dp_policy() {
    return [](const DpStateView& view) -> DpAction {
        const DpInstance& inst = *view.instance;
        if (inst.mode == DpInstance::Mode::SingleGroup)
            return DpAction{greedy_select(view.beliefs), -1};

        auto argmax_in = [&](int cell, UserGroup g) {
            int best = -1;
            for (int u = 0; u < inst.user_count(); ++u) {
                if (inst.users[u].cell != cell || inst.users[u].group != g)
                    continue;
                if (best < 0 || view.beliefs[u] > view.beliefs[best])
                    best = u;
            }
            return best;
        };

        UserGroup g1;
        if (inst.mode == DpInstance::Mode::TwoCellPattern) {
            g1 = inst.pattern.cell1_group_at(view.forward_index);
        } else {
            int best = -1;
            for (int u = 0; u < inst.user_count(); ++u) {
                if (inst.users[u].cell != 1)
                    continue;
                if (best < 0 || view.beliefs[u] > view.beliefs[best])
                    best = u;
            }
            g1 = inst.users[best].group;
        }
        int primary = argmax_in(1, g1);
        int secondary = argmax_in(2, g1 == UserGroup::Near ? UserGroup::Far : UserGroup::Near);
        return DpAction{primary, secondary};
    };
}

void DpTable::write_csv(std::ostream& out) const {
    out << "node,depth,value,action\n";
    std::vector<const std::pair<const DpNodeKey, DpNodeInfo>*> rows;
    rows.reserve(nodes_.size());
    for (const auto& kv : nodes_)
        rows.push_back(&kv);
    std::sort(rows.begin(), rows.end(), [](const auto* a, const auto* b) {
        if (a->first.depth != b->first.depth)
            return a->first.depth > b->first.depth;
        if (a->first.sym[0] != b->first.sym[0])
            return a->first.sym[0] < b->first.sym[0];
        return a->first.sym[1] < b->first.sym[1];
    });
    char buf[64];
    for (const auto* row : rows) {
        std::string node;
        for (int u = 0; u < instance_.user_count(); ++u) {
            if (u)
                node += '|';
            node += sym_to_string(unpack_sym(key_byte(row->first, u)));
        }
        std::snprintf(buf, sizeof buf, "%.17g", row->second.value);
        out << node << ',' << row->first.depth << ',' << buf << ','
            << action_to_string(instance_, row->second.action) << '\n';
    }
}

bool value_symmetry_check(const DpTable& table) {
    const DpInstance& inst = table.instance();
    std::vector<std::pair<int, int>> swaps;
    for (int u = 0; u < inst.user_count(); ++u)
        for (int v = u + 1; v < inst.user_count(); ++v)
            if (inst.users[u].cell == inst.users[v].cell &&
                inst.users[u].group == inst.users[v].group &&
                inst.users[u].initial_belief == inst.users[v].initial_belief)
                swaps.emplace_back(u, v);
    if (swaps.empty())
        return true;
    for (const auto& kv : table.nodes()) {
        for (auto [u, v] : swaps) {
            DpNodeKey swapped = kv.first;
            std::uint8_t bu = key_byte(swapped, u);
            std::uint8_t bv = key_byte(swapped, v);
            if (bu == bv)
                continue;
            set_key_byte(swapped, u, bv);
            set_key_byte(swapped, v, bu);
            const DpNodeInfo* other = table.find(swapped);
            if (!other || other->value != kv.second.value)
                return false;
        }
    }
    return true;
}

double sufficient_condition_check(const TransitionMatrix& chain, int n_users, int horizon,
                                  const std::vector<int>& gaps) {
    if (n_users < 1 || horizon < 1)
        throw std::invalid_argument("need n_users >= 1 and horizon >= 1");
    if (n_users > 4 || horizon > 6)
        throw BudgetError("sufficient condition check limited to n_users <= 4, horizon <= 6");
    if (static_cast<int>(gaps.size()) != horizon - 1)
        throw std::invalid_argument("gap vector must have horizon-1 entries");
    for (int g : gaps)
        if (g < 1)
            throw std::invalid_argument("gaps must be >= 1");
    if (n_users < 2 || horizon < 2)
        return -std::numeric_limits<double>::infinity();

    // Per-position gap transition probabilities: on_from_on[j], on_from_off[j]
    // feed the step into the instant with j instants remaining after it.
    std::vector<double> on_from_on(horizon), on_from_off(horizon);
    for (int j = 1; j < horizon; ++j) {
        int g = gaps[horizon - j - 1];
        on_from_on[j] = t_power(1.0, g, chain);
        on_from_off[j] = t_power(0.0, g, chain);
    }

    // Greedy rollout value: expected ACK count over the next j instants given
    // the realized states `s` one instant back and the order vector `order`.
    std::unordered_map<std::uint32_t, double> memo;
    auto pack_order = [&](const std::vector<int>& order) {
        std::uint32_t v = 0;
        for (int i = 0; i < n_users; ++i)
            v |= std::uint32_t(order[i]) << (2 * i);
        return v;
    };
    std::function<double(int, std::uint32_t, const std::vector<int>&)> rollout =
        [&](int j, std::uint32_t states, const std::vector<int>& order) -> double {
        if (j == 0)
            return 0.0;
        std::uint32_t key = std::uint32_t(j) | (states << 4) | (pack_order(order) << 8);
        auto it = memo.find(key);
        if (it != memo.end())
            return it->second;
        double total = 0.0;
        int head = order[0];
        for (std::uint32_t next = 0; next < (1u << n_users); ++next) {
            double prob = 1.0;
            for (int u = 0; u < n_users; ++u) {
                bool was_on = (states >> u) & 1;
                bool now_on = (next >> u) & 1;
                double on_p = was_on ? on_from_on[j] : on_from_off[j];
                prob *= now_on ? on_p : 1.0 - on_p;
            }
            if (prob == 0.0)
                continue;
            bool ack = (next >> head) & 1;
            std::vector<int> next_order = order_vector_update(order, head, ack ? Arq::Ack : Arq::Nack);
            total += prob * ((ack ? 1.0 : 0.0) + rollout(j - 1, next, next_order));
        }
        memo.emplace(key, total);
        return total;
    };

    std::vector<int> identity(n_users);
    for (int i = 0; i < n_users; ++i)
        identity[i] = i;

    double worst = -std::numeric_limits<double>::infinity();
    for (int m = 2; m <= horizon; ++m) {
        for (int n = 1; n <= n_users - 1; ++n) {
            int y_len = n - 1;
            int x_len = n_users - n - 1;
            for (std::uint32_t y = 0; y < (1u << y_len); ++y) {
                for (std::uint32_t x = 0; x < (1u << x_len); ++x) {
                    // Ranked states: [Y 1 X 0] vs [1 Y 0 X] (0-based ranks).
                    std::uint32_t sa = 0, sb = 0;
                    for (int i = 0; i < y_len; ++i) {
                        sa |= ((y >> i) & 1) << i;
                        sb |= ((y >> i) & 1) << (i + 1);
                    }
                    sa |= 1u << (n - 1);
                    sb |= 1u;
                    for (int i = 0; i < x_len; ++i) {
                        sa |= ((x >> i) & 1) << (n + i);
                        sb |= ((x >> i) & 1) << (n + 1 + i);
                    }
                    double diff = rollout(m - 1, sa, identity) - rollout(m - 1, sb, identity);
                    worst = std::max(worst, diff);
                }
            }
        }
    }
    return worst;
}

} // namespace cellsched
