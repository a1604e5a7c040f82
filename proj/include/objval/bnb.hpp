#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <tuple>
#include <utility>
#include <vector>

#include "objval/model.hpp"
#include "objval/simplex.hpp"

namespace objval {

/// Per integer variable average objective degradation per unit of bound
/// change, separately for the down and up branch.
struct Pseudocosts {
  std::vector<double> down;
  std::vector<double> up;
  std::vector<int> down_count;
  std::vector<int> up_count;
  /// Used while a direction has no observation yet (|c_j|).
  std::vector<double> fallback;

  static Pseudocosts for_instance(const MilpInstance& instance);

  double down_cost(int j) const;
  double up_cost(int j) const;
};

enum class BranchDirection { Down, Up };

/// Running mean of delta_z / delta_bound for (j, direction). Negative
/// delta_z (LP noise) is clamped to zero.
void update_pseudocosts(Pseudocosts& pc, int var, BranchDirection direction, double delta_z,
                        double delta_bound);

struct FractionalValue {
  int var;
  double frac;  ///< x_j - floor(x_j), in (0, 1)
};

/// z + sum_j min(down_j * f_j, up_j * (1 - f_j)).
double node_estimate(double z_lp_parent, const std::vector<FractionalValue>& fractional,
                     const Pseudocosts& pc);

/// Integer variables of `x` farther than 1e-6 from an integer.
std::vector<FractionalValue> fractional_values(const std::vector<double>& x,
                                               const std::vector<char>& integer_mask);

/// Most fractional variable (max min(f, 1-f)), lowest index on ties.
/// Throws NoFractionalVariable when x is integral on the integer set.
int select_branching_variable(const std::vector<double>& x, const std::vector<char>& integer_mask);

/// Rounds integer variables to nearest; if that violates a row, tries
/// rounding them all down. Returns the first rounding that is feasible for
/// the instance.
std::optional<std::vector<double>> rounding_heuristic(const LpSolution& lp, const MilpInstance& instance);

enum class NodeStatus { Open, Inner, Leaf };

struct Node {
  int id = 0;
  int parent_id = -1;
  int depth = 0;
  BoundSet bounds;
  double z_lp_parent = -kInf;
  double estimate = -kInf;
  NodeStatus status = NodeStatus::Open;
  LeafReason leaf_reason = LeafReason::PrunedByBound;
  int branch_var = -1;
  BranchDirection branch_dir = BranchDirection::Down;
  double branch_frac = 0.0;
};

/// Open nodes ordered by (bound ascending, depth descending, id ascending).
class OpenQueue {
 public:
  void push(int id, double bound, int depth);
  /// Best-bound selection. Precondition: not empty.
  int select() const;
  void erase(int id);
  bool empty() const { return keys_.empty(); }
  std::size_t size() const { return keys_.size(); }
  /// Removes and returns, worst key first, every node with bound >= threshold.
  std::vector<int> take_at_or_above(double threshold);

 private:
  using Key = std::tuple<double, int, int>;
  std::set<Key> keys_;
  std::map<int, Key> by_id_;
};

/// State after step t completes.
struct StepRecord {
  long t = 0;
  double incumbent = kInf;
  double best_estimate_min = kInf;
  long rank1_size = 0;
  long open_count = 0;
  double lower_bound = kInf;
  double tree_weight = 0.0;
};

/// Derived tree state maintained purely from the event stream, so a live run
/// and a replay of its log produce identical values.
class TreeTracker {
 public:
  TreeTracker();

  void apply(const TreeEvent& event);
  /// Closes step t and appends its StepRecord.
  void end_step();

  long t() const { return t_; }
  bool has_incumbent() const { return has_incumbent_; }
  double incumbent() const { return incumbent_; }
  double first_incumbent() const { return first_incumbent_; }
  double root_lp() const { return root_lp_; }
  double tree_weight() const { return tree_weight_; }
  long open_count() const { return static_cast<long>(open_.size()); }
  long inner_count() const { return inner_count_; }
  long leaf_count() const { return leaf_count_; }
  long created_count() const { return created_count_; }

  /// min over open bounds, +inf when none are open.
  double lower_bound() const;
  /// min over open creation-time estimates, +inf when none are open.
  double best_estimate_min() const;
  /// |R1|: open nodes whose estimate is <= the best processed estimate at
  /// their depth (+inf for depths without processed nodes).
  long rank1_size() const;
  /// Median of open bounds (mean of middle two); nullopt when none are open.
  std::optional<double> median_open_bound() const;

  const std::vector<StepRecord>& history() const { return history_; }

 private:
  struct OpenInfo {
    double bound;
    int depth;
    double estimate;
  };

  void mark_processed(int depth, double estimate);

  long t_ = 0;
  bool has_incumbent_ = false;
  double incumbent_ = kInf;
  double first_incumbent_ = kInf;
  double root_lp_ = -kInf;
  double tree_weight_ = 0.0;
  long inner_count_ = 0;
  long leaf_count_ = 0;
  long created_count_ = 1;
  std::map<int, OpenInfo> open_;
  std::multiset<double> open_bounds_;
  std::multiset<double> open_estimates_;
  std::vector<double> processed_min_estimate_;
  std::vector<StepRecord> history_;
};

class TreeObserver {
 public:
  virtual ~TreeObserver() = default;
  virtual void on_event(const TreeEvent&) {}
  /// Called once per processed node after all its events were emitted.
  virtual void on_step(const TreeTracker&) {}
};

/// Feeds a recorded log through a fresh tracker, reporting step boundaries
/// exactly as the live engine does.
void replay(const std::vector<TreeEvent>& events, TreeObserver& observer);

struct BnbParams {
  long node_limit = 1'000'000;
  double time_limit_seconds = kInf;
  /// 0 solves the instance as given; otherwise variables and rows are
  /// permuted by this seed before solving.
  std::uint64_t seed = 0;
  int heuristic_frequency = 10;
};

/// Tolerance used for "z >= incumbent" pruning.
double prune_threshold(double incumbent);

/// LP-based branch and bound with best-bound node selection, most-fractional
/// branching and pseudocost node estimates. Throws InfeasibleInstance when
/// the tree is exhausted without a solution and UnboundedRelaxation when a
/// node LP is unbounded.
SolveResult solve(const MilpInstance& instance, const BnbParams& params = {},
                  TreeObserver* observer = nullptr);

/// Variable/row permutation applied for a nonzero seed; `var_order[k]` is
/// the original index of permuted variable k.
struct PermutedInstance {
  MilpInstance instance;
  std::vector<int> var_order;
};
PermutedInstance permute_instance(const MilpInstance& instance, std::uint64_t seed);

}  // namespace objval
