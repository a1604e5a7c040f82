#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace objval {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct RowEntry {
  int idx = 0;
  double coef = 0.0;

  friend bool operator==(const RowEntry&, const RowEntry&) = default;
};

/// min c.x  s.t.  A x >= b,  lower <= x <= upper,  x_j integer for j in the
/// integer set. Rows are always stored in >= form; generators negate <= rows
/// on ingestion. Indices are 0-based.
struct MilpInstance {
  std::string name;
  int num_vars = 0;
  int num_cons = 0;
  std::vector<double> obj;
  std::vector<std::vector<RowEntry>> rows;
  std::vector<double> rhs;
  std::vector<int> integer_set;
  std::vector<int> continuous_set;
  std::vector<double> var_lower;
  std::vector<double> var_upper;
  bool maximize_origin = false;

  /// Appends sum(coefs) >= rhs.
  void add_ge_row(std::vector<RowEntry> coefs, double rhs_value);
  /// Appends sum(coefs) <= rhs, stored negated.
  void add_le_row(std::vector<RowEntry> coefs, double rhs_value);

  /// Per-variable integrality mask derived from integer_set.
  std::vector<char> integer_mask() const;

  /// Objective value in the user-facing sense (re-negated for max origin).
  double user_objective(double internal) const { return maximize_origin ? -internal : internal; }

  friend bool operator==(const MilpInstance&, const MilpInstance&) = default;
};

/// Builds an instance with `n` variables, zero rows, bounds [0, +inf) and
/// every variable continuous.
MilpInstance make_instance(std::string name, int n);

/// Marks `j` integer with bounds [0, 1].
void make_binary(MilpInstance& instance, int j);

/// Empty iff every structural invariant holds; each entry names the field
/// and index that violates it.
std::vector<std::string> validate(const MilpInstance& instance);

/// Flips the objective sign and toggles maximize_origin.
MilpInstance negate_to_min(const MilpInstance& instance);

/// Row activity A_i x.
double row_activity(const MilpInstance& instance, int row, const std::vector<double>& x);

/// c.x summed in index order.
double objective_value(const MilpInstance& instance, const std::vector<double>& x);

/// True when x satisfies every row and bound within `tol` and integer
/// variables are within `tol` of an integer.
bool is_feasible(const MilpInstance& instance, const std::vector<double>& x, double tol = 1e-6);

enum class LpStatus { Optimal, Infeasible, Unbounded };
enum class BasisStatus : std::int8_t { Basic, AtLower, AtUpper, NonbasicFree };

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  double z_lp = 0.0;
  std::vector<double> x;
  std::vector<double> duals;
  std::vector<double> reduced_costs;
  /// Structural variables only.
  std::vector<BasisStatus> basis;
  /// Surplus column of each row; together with `basis` this is a complete
  /// simplex basis usable for warm starts.
  std::vector<BasisStatus> row_basis;
  long iterations = 0;
};

enum class EventKind { NodeProcessed, Branched, Pruned, NewIncumbent, Finished };
enum class LeafReason { PrunedByBound = 0, Infeasible = 1, IntegerFeasible = 2 };

/// One record of the branch-and-bound event stream. Field meaning per kind:
///  NodeProcessed: node, depth, z = node LP value (+inf when infeasible).
///  Branched:      node = parent, z = parent LP value (children's bound),
///                 est_down / est_up = children estimates,
///                 aux = id of the down child (up child is aux + 1).
///  Pruned:        node, depth, z = node bound, aux = LeafReason.
///  NewIncumbent:  node = source node, z = incumbent value.
///  Finished:      z = final incumbent (+inf if none).
/// open_count is |O_t| after the event.
struct TreeEvent {
  long t = 0;
  EventKind kind = EventKind::NodeProcessed;
  int node = 0;
  int depth = 0;
  double z = 0.0;
  double est_down = 0.0;
  double est_up = 0.0;
  int aux = 0;
  long open_count = 0;

  friend bool operator==(const TreeEvent&, const TreeEvent&) = default;
};

enum class ProofStatus { OptimalityProved, NodeLimit, TimeLimit };

struct SolveResult {
  bool has_solution = false;
  double z_star = kInf;
  std::vector<double> x_star;
  double z_lp_root = -kInf;
  long node_count = 0;
  std::vector<TreeEvent> event_log;
  ProofStatus proof = ProofStatus::NodeLimit;
  std::vector<std::pair<long, double>> incumbent_history;
};

const char* to_string(EventKind kind);
const char* to_string(ProofStatus proof);
const char* to_string(LpStatus status);

/// milp-v1 instance file: JSON document, numeric values as decimal strings.
void write_instance(std::ostream& out, const MilpInstance& instance, const std::string& config_hash = "");
MilpInstance read_instance(std::istream& in);
std::string instance_to_string(const MilpInstance& instance, const std::string& config_hash = "");
MilpInstance instance_from_string(const std::string& text);

/// events-v1: one whitespace separated record per line.
void write_event_log(std::ostream& out, const std::vector<TreeEvent>& events);
std::vector<TreeEvent> read_event_log(std::istream& in);

}  // namespace objval
