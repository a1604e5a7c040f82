#pragma once

#include <map>
#include <utility>
#include <vector>

#include "objval/model.hpp"

namespace objval {

/// Per-variable bound overrides applied on top of the instance bounds.
/// Branching decisions are encoded here.
struct BoundSet {
  std::map<int, std::pair<double, double>> overrides;

  void set(int var, double lower, double upper) { overrides[var] = {lower, upper}; }
  bool empty() const { return overrides.empty(); }
};

struct SimplexOptions {
  double primal_tol = 1e-9;
  double dual_tol = 1e-9;
  double pivot_tol = 1e-9;
  int refactor_interval = 50;
  /// 0 means 50 * (n + m).
  long max_iterations = 0;
  /// Pivots without objective progress before switching to Bland's rule
  /// once perturbation is used up; 0 means 3 * (n + m).
  long stall_limit = 0;
  /// Pivots without objective progress before the bounds are perturbed
  /// (at most twice per solve); 0 means max(50, (n + m) / 5).
  long perturb_after = 0;
};

/// Bounded revised primal simplex over the columns [A | -I] (structural
/// variables and row surpluses). Phase 1 minimizes the sum of bound
/// infeasibilities of basic variables starting from any basis, which is
/// what lets warm starts reuse a parent basis after a bound change.
///
/// One solver per thread; the instance must outlive the solver.
class SimplexSolver {
 public:
  explicit SimplexSolver(const MilpInstance& instance, SimplexOptions options = {});

  /// Cold start from the all-surplus basis.
  LpSolution solve(const BoundSet& bounds) const;

  /// Starts from `warm`'s basis; falls back to a cold solve if that basis is
  /// unusable or the warm run breaks down.
  LpSolution solve(const BoundSet& bounds, const LpSolution& warm) const;

 private:
  struct Column {
    std::vector<int> rows;
    std::vector<double> vals;
  };

  LpSolution run(const BoundSet& bounds, const LpSolution* warm) const;

  const MilpInstance& instance_;
  SimplexOptions options_;
  std::vector<Column> columns_;
};

/// Infeasible and unbounded LPs are reported through the status; throws
/// NumericalBreakdown when the pivot budget is exhausted.
LpSolution solve_lp(const MilpInstance& instance, const BoundSet& bounds = {});

/// Same contract as solve_lp, warm-started from `prev`'s basis.
LpSolution resolve_from_basis(const MilpInstance& instance, const LpSolution& prev,
                              const BoundSet& changed_bounds);

}  // namespace objval
