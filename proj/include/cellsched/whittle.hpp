#pragma once

#include <iosfwd>
#include <vector>

#include "cellsched/markov.hpp"

namespace cellsched {

// One near-far pair's belief pair. Values in [0,1].
struct ProjectState {
    double pi1;
    double pi2;

    ProjectState(double a, double b);
    double sum() const { return pi1 + pi2; }
};

struct SearchParams {
    double grid_step = 1e-3; // W-grid spacing for sign-change counting
    double tolerance = 1e-9; // bisection refinement width
    bool widened = false;    // diagnostic scan over [0, 2p + 0.5]
};

struct IndexRecord {
    int horizon = 0;
    double pi1 = 0.0;
    double pi2 = 0.0;
    double w_star = 0.0;
    int crossing_count = 0;
    bool fast_path = false; // closed form (sum outside (2r, 2p)) used
};

// Subsidy-W value recursion for one project against a fixed chain and root
// state. States reachable from the root are the root pair propagated k steps
// or a post-feedback lattice pair {p,r}^2 propagated k steps, so the memo is
// O(t^2) per W evaluation.
class SubsidyValueFn {
  public:
    SubsidyValueFn(const TransitionMatrix& chain, const ProjectState& root, int max_horizon);

    // V_t(W, pi1, pi2): max of the passive branch W + V_{t-1}(T pi1, T pi2)
    // and the active branch pi1 + pi2 + E[V_{t-1} at the feedback lattice].
    double value(double w, int t);
    double active_value(double w, int t);  // t >= 2
    double passive_value(double w, int t); // t >= 2
    // g(W) = [W + V^P] - [(pi1+pi2) + V^A]; negative = active preferred.
    double subsidy_gap(double w, int t);

    const ProjectState& root() const { return root_; }

  private:
    double eval(int t, int family, int k);
    void reset(double w);
    std::pair<double, double> pair_at(int family, int k) const;

    TransitionMatrix chain_;
    ProjectState root_; // stored sorted so V(pi1, pi2) == V(pi2, pi1) exactly
    int max_horizon_;
    double w_ = 0.0;
    bool dirty_ = true;
    std::vector<double> memo_;
    std::vector<char> filled_;
};

double value(const TransitionMatrix& chain, double w, const ProjectState& state, int t);
double active_value(const TransitionMatrix& chain, double w, const ProjectState& state, int t);
double passive_value(const TransitionMatrix& chain, double w, const ProjectState& state, int t);
double subsidy_gap(const TransitionMatrix& chain, double w, const ProjectState& state, int t);

// W* search: closed form when pi1+pi2 is outside (2r, 2p) or t = 1; otherwise
// a sign-change scan of g(W) over [pi1+pi2, 2p] with bisection refinement.
// Throws InvariantError when no crossing exists in the bracket.
IndexRecord find_w_star(const TransitionMatrix& chain, const ProjectState& state, int t,
                        const SearchParams& search = {});

struct SweepFamily {
    double sum = 0.0; // family identifier: common pi1+pi2 on the grid
    int count = 0;
    double min_index = 0.0;
    double max_index = 0.0;
};

struct SweepReport {
    int horizon = 0;
    int grid_n = 0;
    SearchParams search;
    std::vector<IndexRecord> records;
    bool all_unique = false;
    int worst_crossing_count = 0;
    // Largest family-sum separation that still shows an index-order violation
    // (0 when none), and the spacing beyond which order always held.
    double worst_violation_separation = 0.0;
    double order_spacing = 0.0;
    std::vector<SweepFamily> families;
};

// find_w_star over an n x n grid of (pi1, pi2) in [0,1]^2.
SweepReport indexability_sweep(const TransitionMatrix& chain, int t, int grid_n,
                               const SearchParams& search = {}, int workers = 1);

void write_sweep_csv(const SweepReport& report, std::ostream& out);

// Whittle rule: activate the project with the greatest index (ties to the
// lowest project position).
int index_policy_select(const TransitionMatrix& chain, const std::vector<ProjectState>& projects,
                        int t, const SearchParams& search = {});

} // namespace cellsched
