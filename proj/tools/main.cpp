#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cellsched/config.hpp"
#include "cellsched/csv.hpp"
#include "cellsched/dp.hpp"
#include "cellsched/errors.hpp"
#include "cellsched/sim.hpp"
#include "cellsched/whittle.hpp"

namespace {

using namespace cellsched;

TransitionMatrix chain_from(const RunConfig& cfg) {
    if (!cfg.chain_set) {
        throw ConfigError("missing required key 'p' in section [chain]");
    }
    try {
        return TransitionMatrix::from_pr(cfg.p, cfg.r);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

SearchParams search_from(const RunConfig& cfg) {
    SearchParams search;
    search.grid_step = cfg.grid_step;
    search.tolerance = cfg.tolerance;
    search.widened = cfg.widened;
    return search;
}

std::ofstream open_out(const RunConfig& cfg, const std::string& name,
                       std::filesystem::path* where = nullptr) {
    std::filesystem::path dir(cfg.out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    const std::filesystem::path path = dir / name;
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot write output file '" + path.string() + "'");
    }
    if (where != nullptr) {
        *where = path;
    }
    return out;
}

// Every summary carries its full resolved configuration; stripping the
// leading "# " yields a config file that reproduces the run byte for byte.
void embed_config(const RunConfig& cfg, std::ostream& out) {
    std::ostringstream ser;
    serialize_config(cfg, ser);
    std::istringstream lines(ser.str());
    std::string line;
    while (std::getline(lines, line)) {
        out << "# " << line << "\n";
    }
}

std::vector<int> resolve_gaps(const std::vector<int>& given, int horizon,
                              const std::string& which) {
    if (horizon < 1) {
        throw ConfigError("key 'horizon' in section [" + which + "] must be at least 1");
    }
    std::vector<int> gaps = given;
    if (gaps.empty()) {
        gaps.assign(static_cast<std::size_t>(horizon - 1), 1);
    }
    if (static_cast<int>(gaps.size()) != horizon - 1) {
        throw ConfigError("key 'gaps' in section [" + which + "] needs horizon-1 entries");
    }
    for (int g : gaps) {
        if (g < 1) {
            throw ConfigError("key 'gaps' in section [" + which + "] entries must be >= 1");
        }
    }
    return gaps;
}

PolicyId effective_policy(const RunConfig& cfg) {
    if (!cfg.policy.empty()) {
        return parse_policy_id(cfg.policy);
    }
    if (cfg.scenario == "fixed-pattern") {
        return PolicyId::Pattern;
    }
    if (cfg.scenario == "rmab-v") {
        return PolicyId::Index;
    }
    return PolicyId::Greedy;
}

EpisodeConfig episode_config(const RunConfig& cfg, const TransitionMatrix& chain, PolicyId policy) {
    EpisodeConfig ec;
    ec.chain = chain;
    ec.counts = UserCounts{cfg.near, cfg.far};
    ec.horizon = cfg.sim_horizon;
    ec.init_near1 = cfg.init_near1;
    ec.init_far1 = cfg.init_far1;
    ec.init_near2 = cfg.init_near2;
    ec.init_far2 = cfg.init_far2;
    ec.seed = cfg.seed;
    ec.policy = policy;
    ec.index_horizon = cfg.index_horizon;
    ec.search = search_from(cfg);
    if (policy == PolicyId::Pattern) {
        if (cfg.pattern.empty()) {
            throw ConfigError("missing required key 'pattern' in section [sim]");
        }
        ec.pattern = BreathingPattern::parse(cfg.pattern);
    }
    return ec;
}

// Solves the two-cell table a dp-optimal policy run replays.
std::optional<DpTable> table_for(const EpisodeConfig& ec, PolicyId policy,
                                 std::uint64_t node_budget) {
    if (policy != PolicyId::DpOptimal) {
        return std::nullopt;
    }
    DpInstance inst = make_two_cell_instance(ec.chain, initial_beliefs(ec), ec.horizon);
    inst.node_budget = node_budget;
    return solve_optimal(inst);
}

void write_summary_row(std::ostream& out, const std::string& policy,
                       const ThroughputEstimate& est, const RunConfig& cfg) {
    out << policy << ',' << csv_double(est.mean) << ',' << csv_double(est.std_error) << ','
        << est.episodes << ',' << est.horizon << ',' << csv_double(cfg.p) << ','
        << csv_double(cfg.r) << ',' << cfg.seed << '\n';
}

int run_simulate(RunConfig cfg) {
    const TransitionMatrix chain = chain_from(cfg);
    PolicyId policy;
    EpisodeConfig ec;
    std::optional<EpisodeConfig> baseline;
    try {
        policy = effective_policy(cfg);
        ec = episode_config(cfg, chain, policy);
        if (cfg.scenario == "rmab-v" && cfg.near != cfg.far) {
            throw ConfigError("scenario rmab-v needs equal near and far counts");
        }
        if (cfg.episodes < 1) {
            throw ConfigError("key 'episodes' in section [sim] must be at least 1");
        }
        if (!cfg.baseline.empty()) {
            baseline = episode_config(cfg, chain, parse_policy_id(cfg.baseline));
        }
        // Embed the fully resolved state: explicit policy and initial beliefs.
        cfg.policy = policy_id_name(policy);
        const SystemBeliefState init = initial_beliefs(ec);
        cfg.init_near1 = init.near1;
        cfg.init_far1 = init.far1;
        cfg.init_near2 = init.near2;
        cfg.init_far2 = init.far2;
        ec.init_near1 = init.near1;
        ec.init_far1 = init.far1;
        ec.init_near2 = init.near2;
        ec.init_far2 = init.far2;
        if (baseline) {
            baseline->init_near1 = init.near1;
            baseline->init_far1 = init.far1;
            baseline->init_near2 = init.near2;
            baseline->init_far2 = init.far2;
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    const auto table_a = table_for(ec, policy, cfg.node_budget);
    PolicyRuntime runtime_a;
    IndexCache cache;
    runtime_a.table = table_a ? &*table_a : nullptr;
    runtime_a.index_cache = &cache;

    std::filesystem::path summary_path;
    std::ofstream summary = open_out(cfg, "summary.csv", &summary_path);
    embed_config(cfg, summary);
    summary << "policy,mean,stderr,episodes,horizon,p,r,seed\n";

    if (baseline) {
        const auto table_b = table_for(*baseline, baseline->policy, cfg.node_budget);
        PolicyRuntime runtime_b;
        runtime_b.table = table_b ? &*table_b : nullptr;
        runtime_b.index_cache = &cache;
        const ComparisonReport report =
            compare_policies(ec, *baseline, cfg.episodes, cfg.workers, runtime_a, runtime_b);
        write_summary_row(summary, policy_id_name(policy), report.a, cfg);
        write_summary_row(summary, policy_id_name(baseline->policy), report.b, cfg);
        ThroughputEstimate diff;
        diff.mean = report.mean_diff;
        diff.std_error = report.std_error_diff;
        diff.episodes = report.a.episodes;
        diff.horizon = report.a.horizon;
        write_summary_row(
            summary, policy_id_name(policy) + "-minus-" + policy_id_name(baseline->policy), diff,
            cfg);
        std::cout << policy_id_name(policy) << ": mean " << csv_double(report.a.mean)
                  << " stderr " << csv_double(report.a.std_error) << "\n"
                  << policy_id_name(baseline->policy) << ": mean " << csv_double(report.b.mean)
                  << " stderr " << csv_double(report.b.std_error) << "\n"
                  << "paired diff: " << csv_double(report.mean_diff) << " stderr "
                  << csv_double(report.std_error_diff) << "\n";
    } else {
        const ThroughputEstimate est =
            estimate_throughput(ec, cfg.episodes, cfg.workers, runtime_a);
        write_summary_row(summary, policy_id_name(policy), est, cfg);
        std::cout << policy_id_name(policy) << ": mean " << csv_double(est.mean) << " stderr "
                  << csv_double(est.std_error) << "\n";
    }

    if (cfg.traces) {
        const EpisodeTrace trace = run_episode(ec, 0, runtime_a);
        std::ofstream tf = open_out(cfg, "trace_" + policy_id_name(policy) + ".csv");
        write_trace_csv(trace, tf);
    }
    std::cout << "wrote " << summary_path.string() << "\n";
    return 0;
}

int run_dp_solve(const RunConfig& cfg) {
    const TransitionMatrix chain = chain_from(cfg);
    DpInstance inst{chain, DpInstance::Mode::TwoCellFree, 0, {}, {}, {}};
    try {
        if (cfg.dp_mode == "single-group") {
            const auto gaps = resolve_gaps(cfg.dp_gaps, cfg.dp_horizon, "dp");
            std::vector<Belief> init = cfg.dp_init;
            if (init.empty()) {
                init.assign(static_cast<std::size_t>(cfg.dp_users), stationary_belief(chain));
            }
            if (static_cast<int>(init.size()) != cfg.dp_users) {
                throw ConfigError("key 'init' in section [dp] needs one belief per user");
            }
            const FeedbackPropagation fb = cfg.dp_feedback == "reset-and-decay"
                                               ? FeedbackPropagation::ResetAndDecay
                                               : FeedbackPropagation::ResetOnly;
            inst = make_single_group_instance(chain, init, cfg.dp_horizon, gaps, fb);
        } else {
            EpisodeConfig shape;
            shape.chain = chain;
            shape.counts = UserCounts{cfg.near, cfg.far};
            shape.horizon = cfg.dp_horizon;
            shape.init_near1 = cfg.init_near1;
            shape.init_far1 = cfg.init_far1;
            shape.init_near2 = cfg.init_near2;
            shape.init_far2 = cfg.init_far2;
            const SystemBeliefState init = initial_beliefs(shape);
            if (cfg.dp_mode == "pattern") {
                if (cfg.pattern.empty()) {
                    throw ConfigError("missing required key 'pattern' in section [sim]");
                }
                inst = make_pattern_instance(chain, init, cfg.dp_horizon,
                                             BreathingPattern::parse(cfg.pattern));
            } else {
                inst = make_two_cell_instance(chain, init, cfg.dp_horizon);
            }
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    inst.node_budget = cfg.node_budget;

    const DpTable table = solve_optimal(inst);
    std::filesystem::path path;
    std::ofstream out = open_out(cfg, "value_table.csv", &path);
    embed_config(cfg, out);
    table.write_csv(out);
    std::cout << "optimal value: " << csv_double(table.root_value()) << " over "
              << table.node_count() << " nodes\n";
    if (cfg.check_greedy) {
        const DpTable greedy = evaluate_policy(inst, greedy_dp_policy());
        const double diff = table.root_value() - greedy.root_value();
        std::cout << "greedy value: " << csv_double(greedy.root_value())
                  << " (optimal minus greedy: " << csv_double(diff) << ")\n";
    }
    std::cout << "wrote " << path.string() << "\n";
    return 0;
}

int run_figures(const RunConfig& cfg, const std::string& figure) {
    FigureId id;
    try {
        id = parse_figure_id(figure);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    FigureParams params = default_figure_params(id);
    if (cfg.chain_set) {
        params.chain = chain_from(cfg);
    }
    params.horizon = cfg.whittle_horizon;
    params.grid_n = cfg.grid_n;
    params.search = search_from(cfg);
    params.workers = cfg.workers;

    std::filesystem::path path;
    std::ofstream out = open_out(cfg, figure + ".csv", &path);
    emit_figure_data(id, params, out);
    std::cout << "wrote " << path.string() << "\n";
    return 0;
}

int run_index(const RunConfig& cfg, const std::string& figure) {
    if (!figure.empty()) {
        return run_figures(cfg, figure);
    }
    const TransitionMatrix chain = chain_from(cfg);
    const SweepReport report = indexability_sweep(chain, cfg.whittle_horizon, cfg.grid_n,
                                                  search_from(cfg), cfg.workers);
    std::filesystem::path path;
    std::ofstream out = open_out(cfg, "sweep.csv", &path);
    embed_config(cfg, out);
    write_sweep_csv(report, out);
    std::cout << "states: " << report.records.size()
              << " unique_crossings: " << (report.all_unique ? "yes" : "no")
              << " worst_crossing_count: " << report.worst_crossing_count
              << " order_spacing: " << csv_double(report.order_spacing) << "\n";
    std::cout << "wrote " << path.string() << "\n";
    return 0;
}

int run_check_condition(const RunConfig& cfg) {
    const TransitionMatrix chain = chain_from(cfg);
    const auto gaps = resolve_gaps(cfg.cond_gaps, cfg.cond_horizon, "condition");
    double worst = 0.0;
    try {
        worst = sufficient_condition_check(chain, cfg.cond_users, cfg.cond_horizon, gaps);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    const bool holds = worst <= 1.0 + 1e-9;

    std::filesystem::path path;
    std::ofstream out = open_out(cfg, "condition.csv", &path);
    embed_config(cfg, out);
    out << "users,horizon,gaps,max_difference,holds\n";
    std::string gap_text;
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        if (i) {
            gap_text += '|';
        }
        gap_text += std::to_string(gaps[i]);
    }
    out << cfg.cond_users << ',' << cfg.cond_horizon << ',' << gap_text << ','
        << csv_double(worst) << ',' << (holds ? 1 : 0) << '\n';
    std::cout << "max pairwise rollout difference: " << csv_double(worst)
              << (holds ? " (condition holds)" : " (condition exceeded)") << "\n";
    std::cout << "wrote " << path.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-cell ARQ opportunistic scheduling toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    std::string figure;
    int workers_override = 0;

    auto add_common = [&](CLI::App* sub, bool with_figure) {
        sub->add_option("--config", config_path, "run configuration file")->required();
        sub->add_option("--out", out_override, "output directory (overrides the config)");
        sub->add_option("--workers", workers_override, "worker threads (overrides the config)");
        if (with_figure) {
            sub->add_option("--figure", figure, "figure to reproduce: fig4, fig5, or fig6");
        }
    };

    CLI::App* simulate = app.add_subcommand("simulate", "run Monte Carlo episodes");
    CLI::App* dp_solve = app.add_subcommand("dp-solve", "solve an exact value table");
    CLI::App* index = app.add_subcommand("index", "index sweep or figure data");
    CLI::App* check = app.add_subcommand("check-condition", "greedy-optimality condition check");
    CLI::App* figures = app.add_subcommand("figures", "figure-reproduction CSVs");
    add_common(simulate, false);
    add_common(dp_solve, false);
    add_common(index, true);
    add_common(check, false);
    add_common(figures, true);
    figures->get_option("--figure")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        cellsched::RunConfig cfg = cellsched::parse_config_file(config_path);
        if (!out_override.empty()) {
            cfg.out_dir = out_override;
        }
        if (workers_override > 0) {
            cfg.workers = workers_override;
        }
        if (simulate->parsed()) {
            return run_simulate(cfg);
        }
        if (dp_solve->parsed()) {
            return run_dp_solve(cfg);
        }
        if (index->parsed()) {
            return run_index(cfg, figure);
        }
        if (check->parsed()) {
            return run_check_condition(cfg);
        }
        return run_figures(cfg, figure);
    } catch (const cellsched::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const cellsched::BudgetError& e) {
        std::cerr << "budget exceeded: " << e.what() << "\n";
        return 3;
    } catch (const cellsched::InvariantError& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
