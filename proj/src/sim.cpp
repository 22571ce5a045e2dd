#include "cellsched/sim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <exception>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "cellsched/csv.hpp"
#include "cellsched/errors.hpp"

namespace cellsched {

namespace {

// Flat user numbering: cell 1 near, cell 1 far, cell 2 near, cell 2 far.
int user_position(const UserCounts& counts, int cell, UserGroup group, int index) {
    int pos = index;
    if (group == UserGroup::Far) {
        pos += counts.near;
    }
    if (cell == 2) {
        pos += counts.per_cell();
    }
    return pos;
}

void apply_updates(SystemBeliefState& beliefs, const JointAction& action, Arq ack1, Arq ack2,
                   const TransitionMatrix& chain) {
    for (int cell = 1; cell <= 2; ++cell) {
        for (UserGroup g : {UserGroup::Near, UserGroup::Far}) {
            auto& vec = beliefs.group(cell, g);
            const UserRef& picked = cell == 1 ? action.cell1 : action.cell2;
            if (picked.group == g) {
                vec = belief_update(vec, picked.index, cell == 1 ? ack1 : ack2, chain);
            } else {
                for (double& x : vec) {
                    x = t_operator(x, chain);
                }
            }
        }
    }
}

std::vector<int> resolve_pairing(const std::vector<int>& given, int from_count, int to_count) {
    std::vector<int> pairing = given;
    if (pairing.empty()) {
        pairing.resize(static_cast<std::size_t>(from_count));
        for (int i = 0; i < from_count; ++i) {
            pairing[static_cast<std::size_t>(i)] = i;
        }
    }
    if (static_cast<int>(pairing.size()) != from_count) {
        throw std::invalid_argument("pairing size does not match the group size");
    }
    std::vector<char> seen(static_cast<std::size_t>(to_count), 0);
    for (int v : pairing) {
        if (v < 0 || v >= to_count || seen[static_cast<std::size_t>(v)]) {
            throw std::invalid_argument("pairing must be a bijection onto the partner group");
        }
        seen[static_cast<std::size_t>(v)] = 1;
    }
    return pairing;
}

std::vector<Belief> resolve_group_init(const std::vector<Belief>& given, int count,
                                       const TransitionMatrix& chain) {
    std::vector<Belief> out = given;
    if (out.empty()) {
        out.assign(static_cast<std::size_t>(count), stationary_belief(chain));
    }
    if (static_cast<int>(out.size()) != count) {
        throw std::invalid_argument("initial belief list does not match the user count");
    }
    for (double x : out) {
        if (!(x >= 0.0 && x <= 1.0)) {
            throw std::invalid_argument("initial beliefs must lie in [0,1]");
        }
    }
    return out;
}

void validate_config(const EpisodeConfig& config, const PolicyRuntime& runtime) {
    if (config.horizon < 1) {
        throw std::invalid_argument("horizon must be at least 1");
    }
    if (config.counts.near < 1 || config.counts.far < 1) {
        throw std::invalid_argument("both user groups must be non-empty");
    }
    switch (config.policy) {
    case PolicyId::Pattern:
        if (config.pattern.cell1_groups.empty()) {
            throw std::invalid_argument("pattern policy needs a breathing pattern");
        }
        break;
    case PolicyId::Index:
        if (config.counts.near != config.counts.far) {
            throw std::invalid_argument("project pairing needs equal near and far counts");
        }
        break;
    case PolicyId::DpOptimal:
        if (runtime.table == nullptr) {
            throw std::invalid_argument("dp-optimal policy needs a solved table");
        }
        if (runtime.table->instance().horizon != config.horizon ||
            runtime.table->instance().user_count() != 2 * config.counts.per_cell()) {
            throw std::invalid_argument("solved table does not match the episode shape");
        }
        break;
    default: break;
    }
}

struct IndexProject {
    double pi1;
    double pi2;
    JointAction action;
};

std::vector<IndexProject> build_projects(const SystemBeliefState& beliefs,
                                         const std::vector<int>& pair_near1,
                                         const std::vector<int>& pair_far1) {
    std::vector<IndexProject> projects;
    projects.reserve(pair_near1.size() + pair_far1.size());
    for (std::size_t i = 0; i < pair_near1.size(); ++i) {
        const int j = pair_near1[i];
        projects.push_back({beliefs.near1[i], beliefs.far2[static_cast<std::size_t>(j)],
                            JointAction{{UserGroup::Near, static_cast<int>(i)},
                                        {UserGroup::Far, j}}});
    }
    for (std::size_t k = 0; k < pair_far1.size(); ++k) {
        const int j = pair_far1[k];
        projects.push_back({beliefs.far1[k], beliefs.near2[static_cast<std::size_t>(j)],
                            JointAction{{UserGroup::Far, static_cast<int>(k)},
                                        {UserGroup::Near, j}}});
    }
    return projects;
}

EpisodeTrace run_episode_impl(const EpisodeConfig& config, std::uint64_t episode_id,
                              const PolicyRuntime& runtime,
                              const std::vector<std::pair<Arq, Arq>>* forced) {
    validate_config(config, runtime);
    if (forced != nullptr && static_cast<int>(forced->size()) != config.horizon) {
        throw std::invalid_argument("forced feedback must cover every interval");
    }

    const TransitionMatrix& chain = config.chain;
    SystemBeliefState beliefs = initial_beliefs(config);
    const int total_users = 2 * config.counts.per_cell();

    std::vector<ChannelState> states(static_cast<std::size_t>(total_users), ChannelState::Off);
    std::vector<CounterRng> channel_rngs;
    if (forced == nullptr) {
        channel_rngs.reserve(static_cast<std::size_t>(total_users));
        const SystemBeliefState& init = beliefs;
        auto init_of = [&](int pos) {
            const int per_cell = config.counts.per_cell();
            const int cell = pos < per_cell ? 1 : 2;
            const int within = pos % per_cell;
            const UserGroup g = within < config.counts.near ? UserGroup::Near : UserGroup::Far;
            const int idx = g == UserGroup::Near ? within : within - config.counts.near;
            return init.group(cell, g)[static_cast<std::size_t>(idx)];
        };
        for (int pos = 0; pos < total_users; ++pos) {
            channel_rngs.push_back(
                CounterRng::stream(config.seed, {1, episode_id, static_cast<std::uint64_t>(pos)}));
            states[static_cast<std::size_t>(pos)] =
                channel_rngs.back().next_bool(init_of(pos)) ? ChannelState::On : ChannelState::Off;
        }
    }
    CounterRng policy_rng = CounterRng::stream(config.seed, {2, episode_id});

    std::optional<TableFollower> follower;
    if (config.policy == PolicyId::DpOptimal) {
        follower.emplace(*runtime.table);
    }
    IndexCache local_cache;
    IndexCache* cache = runtime.index_cache != nullptr ? runtime.index_cache : &local_cache;
    std::vector<int> pair_near1;
    std::vector<int> pair_far1;
    if (config.policy == PolicyId::Index) {
        pair_near1 = resolve_pairing(config.pair_near1, config.counts.near, config.counts.far);
        pair_far1 = resolve_pairing(config.pair_far1, config.counts.far, config.counts.near);
    }

    auto pick_action = [&](int interval) -> JointAction {
        switch (config.policy) {
        case PolicyId::Greedy: return asymmetric_policy_step(beliefs);
        case PolicyId::Pattern: return fixed_pattern_policy_step(beliefs, config.pattern, interval);
        case PolicyId::Random: {
            const int nf = config.counts.near * config.counts.far;
            const int count = 2 * nf;
            int idx = static_cast<int>(policy_rng.next_double() * count);
            idx = std::min(idx, count - 1);
            if (idx < nf) {
                return JointAction{{UserGroup::Near, idx / config.counts.far},
                                   {UserGroup::Far, idx % config.counts.far}};
            }
            idx -= nf;
            return JointAction{{UserGroup::Far, idx / config.counts.near},
                               {UserGroup::Near, idx % config.counts.near}};
        }
        case PolicyId::Index: {
            const auto projects = build_projects(beliefs, pair_near1, pair_far1);
            const int t = std::min(config.index_horizon, beliefs.remaining);
            int best = 0;
            double best_index =
                cache->get(chain, projects[0].pi1, projects[0].pi2, t, config.search);
            for (std::size_t i = 1; i < projects.size(); ++i) {
                const double w =
                    cache->get(chain, projects[i].pi1, projects[i].pi2, t, config.search);
                if (w > best_index) {
                    best_index = w;
                    best = static_cast<int>(i);
                }
            }
            return projects[static_cast<std::size_t>(best)].action;
        }
        case PolicyId::DpOptimal: {
            const DpAction& a = follower->action();
            const DpInstance& inst = runtime.table->instance();
            return JointAction{inst.user_ref(a.primary), inst.user_ref(a.secondary)};
        }
        }
        throw std::logic_error("unreachable policy id");
    };

    EpisodeTrace trace;
    trace.counts = config.counts;
    trace.horizon = config.horizon;
    trace.steps.reserve(static_cast<std::size_t>(config.horizon));

    for (int k = 0; k < config.horizon; ++k) {
        beliefs.remaining = config.horizon - k;
        const JointAction action = pick_action(k);
        const auto group_size = [&](UserGroup g) {
            return g == UserGroup::Near ? config.counts.near : config.counts.far;
        };
        if (!in_admissible_set(action) || action.cell1.index < 0 ||
            action.cell1.index >= group_size(action.cell1.group) || action.cell2.index < 0 ||
            action.cell2.index >= group_size(action.cell2.group)) {
            throw InvariantError("policy emitted an action outside the admissible set");
        }

        ChannelState true1;
        ChannelState true2;
        if (forced != nullptr) {
            const auto& [f1, f2] = (*forced)[static_cast<std::size_t>(k)];
            true1 = f1 == Arq::Ack ? ChannelState::On : ChannelState::Off;
            true2 = f2 == Arq::Ack ? ChannelState::On : ChannelState::Off;
        } else {
            true1 = states[static_cast<std::size_t>(
                user_position(config.counts, 1, action.cell1.group, action.cell1.index))];
            true2 = states[static_cast<std::size_t>(
                user_position(config.counts, 2, action.cell2.group, action.cell2.index))];
        }
        const Arq ack1 = true1 == ChannelState::On ? Arq::Ack : Arq::Nack;
        const Arq ack2 = true2 == ChannelState::On ? Arq::Ack : Arq::Nack;
        const int reward = (ack1 == Arq::Ack ? 1 : 0) + (ack2 == Arq::Ack ? 1 : 0);

        TraceStep step;
        step.interval = k;
        step.action = action;
        step.true1 = true1;
        step.true2 = true2;
        step.ack1 = ack1;
        step.ack2 = ack2;
        step.reward = reward;
        step.beliefs_before = beliefs;
        trace.steps.push_back(std::move(step));
        trace.total_reward += reward;

        apply_updates(beliefs, action, ack1, ack2, chain);
        if (forced == nullptr) {
            for (int pos = 0; pos < total_users; ++pos) {
                states[static_cast<std::size_t>(pos)] =
                    sample_transition(states[static_cast<std::size_t>(pos)], chain,
                                      channel_rngs[static_cast<std::size_t>(pos)]);
            }
        }
        if (follower) {
            follower->advance(ack1, ack2);
        }
    }
    return trace;
}

// Runs `fn(episode_id)` for ids [0, episodes) split across workers; results
// land in an id-indexed vector so aggregation order never depends on timing.
std::vector<double> per_episode(int episodes, int workers, const std::function<double(int)>& fn) {
    std::vector<double> out(static_cast<std::size_t>(episodes), 0.0);
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const int nthreads = std::clamp(workers, 1, static_cast<int>(hw));
    if (nthreads == 1 || episodes == 1) {
        for (int e = 0; e < episodes; ++e) {
            out[static_cast<std::size_t>(e)] = fn(e);
        }
        return out;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(nthreads));
    const int chunk = (episodes + nthreads - 1) / nthreads;
    for (int w = 0; w < nthreads; ++w) {
        const int begin = w * chunk;
        const int end = std::min(episodes, begin + chunk);
        pool.emplace_back([&, w, begin, end] {
            try {
                for (int e = begin; e < end; ++e) {
                    out[static_cast<std::size_t>(e)] = fn(e);
                }
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
    for (const auto& err : errors) {
        if (err) {
            std::rethrow_exception(err);
        }
    }
    return out;
}

ThroughputEstimate summarize(const std::vector<double>& samples, int horizon) {
    ThroughputEstimate est;
    est.episodes = static_cast<int>(samples.size());
    est.horizon = horizon;
    double sum = 0.0;
    for (double x : samples) {
        sum += x;
    }
    est.mean = sum / static_cast<double>(samples.size());
    if (samples.size() > 1) {
        double ss = 0.0;
        for (double x : samples) {
            ss += (x - est.mean) * (x - est.mean);
        }
        const double var = ss / static_cast<double>(samples.size() - 1);
        est.std_error = std::sqrt(var / static_cast<double>(samples.size()));
    }
    return est;
}

std::string user_label(const UserRef& ref) {
    return (ref.group == UserGroup::Near ? "n" : "f") + std::to_string(ref.index);
}

} // namespace

PolicyId parse_policy_id(const std::string& name) {
    if (name == "greedy") return PolicyId::Greedy;
    if (name == "pattern") return PolicyId::Pattern;
    if (name == "random") return PolicyId::Random;
    if (name == "index") return PolicyId::Index;
    if (name == "dp-optimal") return PolicyId::DpOptimal;
    throw std::invalid_argument("unknown policy '" + name + "'");
}

std::string policy_id_name(PolicyId id) {
    switch (id) {
    case PolicyId::Greedy: return "greedy";
    case PolicyId::Pattern: return "pattern";
    case PolicyId::Random: return "random";
    case PolicyId::Index: return "index";
    case PolicyId::DpOptimal: return "dp-optimal";
    }
    return "?";
}

std::size_t IndexCache::KeyHash::operator()(const Key& k) const {
    const std::uint64_t a = std::bit_cast<std::uint64_t>(k.hi);
    const std::uint64_t b = std::bit_cast<std::uint64_t>(k.lo);
    return static_cast<std::size_t>(mix64(a ^ mix64(b + static_cast<std::uint64_t>(k.t))));
}

double IndexCache::get(const TransitionMatrix& chain, double pi1, double pi2, int t,
                       const SearchParams& search) {
    Key key{std::max(pi1, pi2), std::min(pi1, pi2), t};
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = map_.find(key);
        if (it != map_.end()) {
            return it->second;
        }
    }
    const double w = find_w_star(chain, ProjectState(key.hi, key.lo), t, search).w_star;
    std::lock_guard<std::mutex> lock(mutex_);
    map_.emplace(key, w);
    return w;
}

std::size_t IndexCache::size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return map_.size();
}

SystemBeliefState initial_beliefs(const EpisodeConfig& config) {
    SystemBeliefState state;
    state.near1 = resolve_group_init(config.init_near1, config.counts.near, config.chain);
    state.far1 = resolve_group_init(config.init_far1, config.counts.far, config.chain);
    state.near2 = resolve_group_init(config.init_near2, config.counts.near, config.chain);
    state.far2 = resolve_group_init(config.init_far2, config.counts.far, config.chain);
    state.remaining = config.horizon;
    return state;
}

EpisodeTrace run_episode(const EpisodeConfig& config, std::uint64_t episode_id,
                         const PolicyRuntime& runtime) {
    return run_episode_impl(config, episode_id, runtime, nullptr);
}

EpisodeTrace run_forced_episode(const EpisodeConfig& config,
                                const std::vector<std::pair<Arq, Arq>>& feedback,
                                const PolicyRuntime& runtime) {
    return run_episode_impl(config, 0, runtime, &feedback);
}

ThroughputEstimate estimate_throughput(const EpisodeConfig& config, int episodes, int workers,
                                       const PolicyRuntime& runtime) {
    if (episodes < 1) {
        throw std::invalid_argument("episode count must be at least 1");
    }
    validate_config(config, runtime);
    const auto samples = per_episode(episodes, workers, [&](int e) {
        const EpisodeTrace trace = run_episode(config, static_cast<std::uint64_t>(e), runtime);
        return static_cast<double>(trace.total_reward) / static_cast<double>(config.horizon);
    });
    return summarize(samples, config.horizon);
}

ComparisonReport compare_policies(const EpisodeConfig& config_a, const EpisodeConfig& config_b,
                                  int episodes, int workers, const PolicyRuntime& runtime_a,
                                  const PolicyRuntime& runtime_b) {
    if (episodes < 1) {
        throw std::invalid_argument("episode count must be at least 1");
    }
    const bool matched = config_a.chain.p == config_b.chain.p &&
                         config_a.chain.r == config_b.chain.r &&
                         config_a.counts.near == config_b.counts.near &&
                         config_a.counts.far == config_b.counts.far &&
                         config_a.horizon == config_b.horizon &&
                         config_a.seed == config_b.seed &&
                         config_a.init_near1 == config_b.init_near1 &&
                         config_a.init_far1 == config_b.init_far1 &&
                         config_a.init_near2 == config_b.init_near2 &&
                         config_a.init_far2 == config_b.init_far2;
    if (!matched) {
        throw std::invalid_argument("compared configs must share everything but the policy");
    }
    validate_config(config_a, runtime_a);
    validate_config(config_b, runtime_b);

    std::vector<double> sa(static_cast<std::size_t>(episodes));
    std::vector<double> sb(static_cast<std::size_t>(episodes));
    per_episode(episodes, workers, [&](int e) {
        const auto ta = run_episode(config_a, static_cast<std::uint64_t>(e), runtime_a);
        const auto tb = run_episode(config_b, static_cast<std::uint64_t>(e), runtime_b);
        sa[static_cast<std::size_t>(e)] =
            static_cast<double>(ta.total_reward) / static_cast<double>(config_a.horizon);
        sb[static_cast<std::size_t>(e)] =
            static_cast<double>(tb.total_reward) / static_cast<double>(config_b.horizon);
        return 0.0;
    });

    ComparisonReport report;
    report.a = summarize(sa, config_a.horizon);
    report.b = summarize(sb, config_b.horizon);
    std::vector<double> diff(static_cast<std::size_t>(episodes));
    for (int e = 0; e < episodes; ++e) {
        diff[static_cast<std::size_t>(e)] =
            sa[static_cast<std::size_t>(e)] - sb[static_cast<std::size_t>(e)];
    }
    const auto d = summarize(diff, config_a.horizon);
    report.mean_diff = d.mean;
    report.std_error_diff = d.std_error;
    return report;
}

void write_trace_csv(const EpisodeTrace& trace, std::ostream& out) {
    out << "interval,cell1_user,cell2_user,ack1,ack2,reward\n";
    for (const TraceStep& s : trace.steps) {
        out << s.interval << ',' << user_label(s.action.cell1) << ','
            << user_label(s.action.cell2) << ',' << (s.ack1 == Arq::Ack ? 1 : 0) << ','
            << (s.ack2 == Arq::Ack ? 1 : 0) << ',' << s.reward << '\n';
    }
}

FigureId parse_figure_id(const std::string& name) {
    if (name == "fig4") return FigureId::Fig4;
    if (name == "fig5") return FigureId::Fig5;
    if (name == "fig6") return FigureId::Fig6;
    throw std::invalid_argument("unknown figure '" + name + "'");
}

FigureParams default_figure_params(FigureId which) {
    FigureParams params;
    switch (which) {
    case FigureId::Fig4:
    case FigureId::Fig5: params.chain = TransitionMatrix::from_pr(0.4809, 0.3294); break;
    case FigureId::Fig6: params.chain = TransitionMatrix::from_pr(0.9861, 0.2043); break;
    }
    params.horizon = 5;
    params.grid_n = 21;
    return params;
}

void emit_figure_data(FigureId which, const FigureParams& params, std::ostream& out) {
    if (which != FigureId::Fig4) {
        const SweepReport report = indexability_sweep(params.chain, params.horizon, params.grid_n,
                                                      params.search, params.workers);
        write_sweep_csv(report, out);
        return;
    }

    // Subsidy-gap curves on a coarse belief grid, swept over the full W range.
    out << "pi1,pi2,w,g,crossing_count\n";
    const double hi = 2.0 * params.chain.p + 0.5;
    constexpr int kStates = 5;
    for (int i = 0; i < kStates; ++i) {
        for (int j = 0; j < kStates; ++j) {
            const ProjectState state(static_cast<double>(i) / (kStates - 1),
                                     static_cast<double>(j) / (kStates - 1));
            const IndexRecord rec = find_w_star(params.chain, state, params.horizon, params.search);
            SubsidyValueFn fn(params.chain, state, params.horizon);
            for (double w = 0.0;; w = std::min(w + params.search.grid_step, hi)) {
                const double g = params.horizon >= 2 ? fn.subsidy_gap(w, params.horizon)
                                                     : w - state.sum();
                out << csv_double(state.pi1) << ',' << csv_double(state.pi2) << ','
                    << csv_double(w) << ',' << csv_double(g) << ',' << rec.crossing_count << '\n';
                if (w >= hi) {
                    break;
                }
            }
        }
    }
}

} // namespace cellsched
