#include "cellsched/whittle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>

#include "cellsched/errors.hpp"

namespace cellsched {

namespace {

constexpr int kMaxSubsidyHorizon = 512;

// Belief-pair families reachable from the root: the root pair itself and the
// three post-feedback lattice pairs.
enum Family : int { kRoot = 0, kPP = 1, kPR = 2, kRR = 3 };

std::string format_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

ProjectState::ProjectState(double a, double b) : pi1(a), pi2(b) {
    if (!(pi1 >= 0.0 && pi1 <= 1.0) || !(pi2 >= 0.0 && pi2 <= 1.0)) {
        throw std::invalid_argument("project beliefs must lie in [0,1]");
    }
}

SubsidyValueFn::SubsidyValueFn(const TransitionMatrix& chain, const ProjectState& root,
                               int max_horizon)
    : chain_(chain), root_(root), max_horizon_(max_horizon) {
    if (max_horizon_ < 1) {
        throw std::invalid_argument("subsidy horizon must be at least 1");
    }
    if (max_horizon_ > kMaxSubsidyHorizon) {
        throw BudgetError("subsidy horizon exceeds supported maximum of " +
                          std::to_string(kMaxSubsidyHorizon));
    }
    // Canonical ordering makes V(pi1, pi2) and V(pi2, pi1) bit-identical.
    if (root_.pi1 < root_.pi2) {
        std::swap(root_.pi1, root_.pi2);
    }
    const std::size_t levels = static_cast<std::size_t>(max_horizon_) + 1;
    memo_.assign(levels * 4 * levels, 0.0);
    filled_.assign(memo_.size(), 0);
}

std::pair<double, double> SubsidyValueFn::pair_at(int family, int k) const {
    auto prop = [&](double x) { return k == 0 ? x : t_power(x, k, chain_); };
    switch (family) {
    case kRoot: return {prop(root_.pi1), prop(root_.pi2)};
    case kPP: return {prop(chain_.p), prop(chain_.p)};
    case kPR: return {prop(chain_.p), prop(chain_.r)};
    default: return {prop(chain_.r), prop(chain_.r)};
    }
}

void SubsidyValueFn::reset(double w) {
    if (!dirty_ && w == w_) {
        return;
    }
    w_ = w;
    dirty_ = false;
    std::fill(filled_.begin(), filled_.end(), 0);
}

double SubsidyValueFn::eval(int t, int family, int k) {
    const std::size_t levels = static_cast<std::size_t>(max_horizon_) + 1;
    const std::size_t idx =
        (static_cast<std::size_t>(t) * 4 + static_cast<std::size_t>(family)) * levels +
        static_cast<std::size_t>(k);
    if (filled_[idx]) {
        return memo_[idx];
    }
    const auto [x1, x2] = pair_at(family, k);
    double v;
    if (t == 1) {
        v = std::max(w_, x1 + x2);
    } else {
        const double passive = w_ + eval(t - 1, family, k + 1);
        const double both = x1 * x2;
        const double split = x1 * (1.0 - x2) + (1.0 - x1) * x2;
        const double neither = (1.0 - x1) * (1.0 - x2);
        const double active = x1 + x2 + both * eval(t - 1, kPP, 0) +
                              split * eval(t - 1, kPR, 0) + neither * eval(t - 1, kRR, 0);
        v = std::max(passive, active);
    }
    filled_[idx] = 1;
    memo_[idx] = v;
    return v;
}

double SubsidyValueFn::value(double w, int t) {
    if (t < 1 || t > max_horizon_) {
        throw std::invalid_argument("value horizon out of range");
    }
    reset(w);
    return eval(t, kRoot, 0);
}

double SubsidyValueFn::active_value(double w, int t) {
    if (t < 2 || t > max_horizon_) {
        throw std::invalid_argument("active continuation needs horizon >= 2");
    }
    reset(w);
    const auto [x1, x2] = pair_at(kRoot, 0);
    const double both = x1 * x2;
    const double split = x1 * (1.0 - x2) + (1.0 - x1) * x2;
    const double neither = (1.0 - x1) * (1.0 - x2);
    return both * eval(t - 1, kPP, 0) + split * eval(t - 1, kPR, 0) +
           neither * eval(t - 1, kRR, 0);
}

double SubsidyValueFn::passive_value(double w, int t) {
    if (t < 2 || t > max_horizon_) {
        throw std::invalid_argument("passive continuation needs horizon >= 2");
    }
    reset(w);
    return eval(t - 1, kRoot, 1);
}

double SubsidyValueFn::subsidy_gap(double w, int t) {
    const double passive_total = w + passive_value(w, t);
    const double active_total = root_.pi1 + root_.pi2 + active_value(w, t);
    return passive_total - active_total;
}

double value(const TransitionMatrix& chain, double w, const ProjectState& state, int t) {
    SubsidyValueFn fn(chain, state, t);
    return fn.value(w, t);
}

double active_value(const TransitionMatrix& chain, double w, const ProjectState& state, int t) {
    SubsidyValueFn fn(chain, state, t);
    return fn.active_value(w, t);
}

double passive_value(const TransitionMatrix& chain, double w, const ProjectState& state, int t) {
    SubsidyValueFn fn(chain, state, t);
    return fn.passive_value(w, t);
}

double subsidy_gap(const TransitionMatrix& chain, double w, const ProjectState& state, int t) {
    SubsidyValueFn fn(chain, state, t);
    return fn.subsidy_gap(w, t);
}

IndexRecord find_w_star(const TransitionMatrix& chain, const ProjectState& state, int t,
                        const SearchParams& search) {
    if (t < 1) {
        throw std::invalid_argument("index horizon must be at least 1");
    }
    if (!(search.grid_step > 0.0) || !(search.tolerance > 0.0)) {
        throw std::invalid_argument("search parameters must be positive");
    }
    IndexRecord rec;
    rec.horizon = t;
    rec.pi1 = state.pi1;
    rec.pi2 = state.pi2;

    const double sum = state.sum();
    const double two_r = 2.0 * chain.r;
    const double two_p = 2.0 * chain.p;
    if (!search.widened && (t == 1 || sum <= two_r || sum >= two_p)) {
        // Outside the interior band the passive/active break-even point is the
        // immediate reward itself; no scan needed.
        rec.w_star = sum;
        rec.crossing_count = 1;
        rec.fast_path = true;
        return rec;
    }

    const double lo = search.widened ? 0.0 : sum;
    const double hi = search.widened ? two_p + 0.5 : two_p;
    SubsidyValueFn fn(chain, state, t);
    auto g = [&](double w) { return t >= 2 ? fn.subsidy_gap(w, t) : w - sum; };

    auto bisect = [&](double wn, double wp) {
        while (wp - wn > search.tolerance) {
            const double mid = 0.5 * (wn + wp);
            if (g(mid) > 0.0) {
                wp = mid;
            } else {
                wn = mid;
            }
        }
        return 0.5 * (wn + wp);
    };

    // Count upward sign changes of g over the grid; each is one break-even
    // point. A unique crossing is what makes the index well defined.
    enum class Side { Start, Neg, Pos };
    Side side = Side::Start;
    double prev_w = lo;
    int crossings = 0;
    double first_root = 0.0;
    for (double w = lo;; w = std::min(w + search.grid_step, hi)) {
        const double gv = g(w);
        const int s = gv > 0.0 ? 1 : (gv < 0.0 ? -1 : 0);
        if (side == Side::Start) {
            if (s >= 0) {
                crossings = 1;
                first_root = w;
                side = Side::Pos;
            } else {
                side = Side::Neg;
            }
        } else if (side == Side::Neg) {
            if (s >= 0) {
                const double root = s == 0 ? w : bisect(prev_w, w);
                if (crossings == 0) {
                    first_root = root;
                }
                ++crossings;
                side = Side::Pos;
            }
        } else if (s < 0) {
            side = Side::Neg;
        }
        prev_w = w;
        if (w >= hi) {
            break;
        }
    }

    if (crossings == 0) {
        throw InvariantError("no passive/active break-even found in [" + format_g(lo) + ", " +
                             format_g(hi) + "] for state (" + format_g(state.pi1) + ", " +
                             format_g(state.pi2) + ") at horizon " + std::to_string(t));
    }
    rec.w_star = first_root;
    rec.crossing_count = crossings;
    rec.fast_path = false;
    return rec;
}

SweepReport indexability_sweep(const TransitionMatrix& chain, int t, int grid_n,
                               const SearchParams& search, int workers) {
    if (grid_n < 2) {
        throw std::invalid_argument("sweep grid needs at least 2 points per axis");
    }
    if (t < 1) {
        throw std::invalid_argument("sweep horizon must be at least 1");
    }
    SweepReport report;
    report.horizon = t;
    report.grid_n = grid_n;
    report.search = search;

    const int total = grid_n * grid_n;
    const double h = 1.0 / static_cast<double>(grid_n - 1);
    report.records.resize(static_cast<std::size_t>(total));

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const int nthreads = std::clamp(workers, 1, static_cast<int>(hw));
    auto run_range = [&](int begin, int end) {
        for (int idx = begin; idx < end; ++idx) {
            const int i = idx / grid_n;
            const int j = idx % grid_n;
            const ProjectState state(static_cast<double>(i) * h, static_cast<double>(j) * h);
            report.records[static_cast<std::size_t>(idx)] = find_w_star(chain, state, t, search);
        }
    };
    if (nthreads == 1) {
        run_range(0, total);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(nthreads));
        const int chunk = (total + nthreads - 1) / nthreads;
        for (int w = 0; w < nthreads; ++w) {
            const int begin = w * chunk;
            const int end = std::min(total, begin + chunk);
            pool.emplace_back([&, w, begin, end] {
                try {
                    run_range(begin, end);
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
    }

    report.all_unique = true;
    report.worst_crossing_count = 0;
    for (const auto& rec : report.records) {
        report.worst_crossing_count = std::max(report.worst_crossing_count, rec.crossing_count);
        if (rec.crossing_count != 1) {
            report.all_unique = false;
        }
    }

    // Group states by their common belief sum: an index that is a function of
    // the sum alone should order these families monotonically.
    const int nfam = 2 * grid_n - 1;
    report.families.assign(static_cast<std::size_t>(nfam), SweepFamily{});
    for (int idx = 0; idx < total; ++idx) {
        const int fam = idx / grid_n + idx % grid_n;
        auto& f = report.families[static_cast<std::size_t>(fam)];
        const double w_star = report.records[static_cast<std::size_t>(idx)].w_star;
        if (f.count == 0) {
            f.sum = static_cast<double>(fam) * h;
            f.min_index = w_star;
            f.max_index = w_star;
        } else {
            f.min_index = std::min(f.min_index, w_star);
            f.max_index = std::max(f.max_index, w_star);
        }
        ++f.count;
    }
    report.worst_violation_separation = 0.0;
    for (int a = 0; a < nfam; ++a) {
        for (int b = a + 1; b < nfam; ++b) {
            if (report.families[static_cast<std::size_t>(b)].min_index <
                report.families[static_cast<std::size_t>(a)].max_index) {
                const double sep = static_cast<double>(b - a) * h;
                report.worst_violation_separation =
                    std::max(report.worst_violation_separation, sep);
            }
        }
    }
    report.order_spacing = report.worst_violation_separation + h;
    return report;
}

void write_sweep_csv(const SweepReport& report, std::ostream& out) {
    out << "pi1,pi2,sum,w_star,crossing_count,fast_path\n";
    for (const auto& rec : report.records) {
        out << format_g(rec.pi1) << ',' << format_g(rec.pi2) << ','
            << format_g(rec.pi1 + rec.pi2) << ',' << format_g(rec.w_star) << ','
            << rec.crossing_count << ',' << (rec.fast_path ? 1 : 0) << '\n';
    }
}

int index_policy_select(const TransitionMatrix& chain, const std::vector<ProjectState>& projects,
                        int t, const SearchParams& search) {
    if (projects.empty()) {
        throw std::invalid_argument("index selection needs at least one project");
    }
    int best = 0;
    double best_index = find_w_star(chain, projects[0], t, search).w_star;
    for (std::size_t i = 1; i < projects.size(); ++i) {
        const double w = find_w_star(chain, projects[i], t, search).w_star;
        if (w > best_index) {
            best_index = w;
            best = static_cast<int>(i);
        }
    }
    return best;
}

} // namespace cellsched
