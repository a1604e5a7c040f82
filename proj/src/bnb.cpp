#include "objval/bnb.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "objval/errors.hpp"
#include "objval/rng.hpp"

namespace objval {

namespace {
constexpr double kIntegralityTol = 1e-6;
}

Pseudocosts Pseudocosts::for_instance(const MilpInstance& instance) {
  const auto n = static_cast<std::size_t>(instance.num_vars);
  Pseudocosts pc;
  pc.down.assign(n, 0.0);
  pc.up.assign(n, 0.0);
  pc.down_count.assign(n, 0);
  pc.up_count.assign(n, 0);
  pc.fallback.resize(n);
  for (std::size_t j = 0; j < n; ++j) pc.fallback[j] = std::abs(instance.obj[j]);
  return pc;
}

double Pseudocosts::down_cost(int j) const {
  const auto k = static_cast<std::size_t>(j);
  return down_count[k] > 0 ? down[k] : fallback[k];
}

double Pseudocosts::up_cost(int j) const {
  const auto k = static_cast<std::size_t>(j);
  return up_count[k] > 0 ? up[k] : fallback[k];
}

void update_pseudocosts(Pseudocosts& pc, int var, BranchDirection direction, double delta_z,
                        double delta_bound) {
  if (!(delta_bound > 0.0)) throw std::invalid_argument("pseudocost update needs delta_bound > 0");
  const double obs = std::max(0.0, delta_z) / delta_bound;
  const auto k = static_cast<std::size_t>(var);
  auto& mean = direction == BranchDirection::Down ? pc.down[k] : pc.up[k];
  auto& count = direction == BranchDirection::Down ? pc.down_count[k] : pc.up_count[k];
  ++count;
  mean += (obs - mean) / count;
}

double node_estimate(double z_lp_parent, const std::vector<FractionalValue>& fractional,
                     const Pseudocosts& pc) {
  double sum = 0.0;
  for (const auto& fv : fractional) {
    sum += std::min(pc.down_cost(fv.var) * fv.frac, pc.up_cost(fv.var) * (1.0 - fv.frac));
  }
  return z_lp_parent + sum;
}

std::vector<FractionalValue> fractional_values(const std::vector<double>& x,
                                               const std::vector<char>& integer_mask) {
  std::vector<FractionalValue> out;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!integer_mask[j]) continue;
    if (std::abs(x[j] - std::round(x[j])) <= kIntegralityTol) continue;
    out.push_back({static_cast<int>(j), x[j] - std::floor(x[j])});
  }
  return out;
}

int select_branching_variable(const std::vector<double>& x, const std::vector<char>& integer_mask) {
  int best = -1;
  double best_score = 0.0;
  for (const auto& fv : fractional_values(x, integer_mask)) {
    const double score = std::min(fv.frac, 1.0 - fv.frac);
    if (best < 0 || score > best_score) {
      best = fv.var;
      best_score = score;
    }
  }
  if (best < 0) throw NoFractionalVariable("LP solution is integral on the integer set");
  return best;
}

std::optional<std::vector<double>> rounding_heuristic(const LpSolution& lp, const MilpInstance& instance) {
  if (lp.status != LpStatus::Optimal) return std::nullopt;
  for (const bool nearest : {true, false}) {
    std::vector<double> x = lp.x;
    for (const int j : instance.integer_set) {
      auto& v = x[static_cast<std::size_t>(j)];
      v = nearest ? std::round(v) : std::floor(v + kIntegralityTol);
    }
    if (is_feasible(instance, x)) return x;
  }
  return std::nullopt;
}

void OpenQueue::push(int id, double bound, int depth) {
  const Key key{bound, -depth, id};
  keys_.insert(key);
  by_id_[id] = key;
}

int OpenQueue::select() const {
  if (keys_.empty()) throw std::logic_error("select on an empty open set");
  return std::get<2>(*keys_.begin());
}

void OpenQueue::erase(int id) {
  const auto it = by_id_.find(id);
  if (it == by_id_.end()) return;
  keys_.erase(it->second);
  by_id_.erase(it);
}

std::vector<int> OpenQueue::take_at_or_above(double threshold) {
  std::vector<int> out;
  while (!keys_.empty()) {
    const auto last = std::prev(keys_.end());
    if (std::get<0>(*last) < threshold) break;
    out.push_back(std::get<2>(*last));
    by_id_.erase(std::get<2>(*last));
    keys_.erase(last);
  }
  return out;
}

TreeTracker::TreeTracker() {
  open_.emplace(0, OpenInfo{-kInf, 0, -kInf});
  open_bounds_.insert(-kInf);
  open_estimates_.insert(-kInf);
}

void TreeTracker::mark_processed(int depth, double estimate) {
  const auto d = static_cast<std::size_t>(depth);
  if (processed_min_estimate_.size() <= d) processed_min_estimate_.resize(d + 1, kInf);
  processed_min_estimate_[d] = std::min(processed_min_estimate_[d], estimate);
}

void TreeTracker::apply(const TreeEvent& e) {
  auto close_open = [&](int id) -> bool {
    const auto it = open_.find(id);
    if (it == open_.end()) return false;
    open_bounds_.erase(open_bounds_.find(it->second.bound));
    open_estimates_.erase(open_estimates_.find(it->second.estimate));
    mark_processed(it->second.depth, it->second.estimate);
    open_.erase(it);
    return true;
  };
  switch (e.kind) {
    case EventKind::NodeProcessed:
      t_ = e.t;
      close_open(e.node);
      if (e.node == 0) root_lp_ = e.z;
      break;
    case EventKind::Branched: {
      ++inner_count_;
      const int depth = e.depth + 1;
      for (int k = 0; k < 2; ++k) {
        const double est = k == 0 ? e.est_down : e.est_up;
        open_.emplace(e.aux + k, OpenInfo{e.z, depth, est});
        open_bounds_.insert(e.z);
        open_estimates_.insert(est);
      }
      created_count_ += 2;
      break;
    }
    case EventKind::Pruned:
      close_open(e.node);
      ++leaf_count_;
      tree_weight_ += std::ldexp(1.0, -e.depth);
      break;
    case EventKind::NewIncumbent:
      if (!has_incumbent_) first_incumbent_ = e.z;
      has_incumbent_ = true;
      incumbent_ = e.z;
      break;
    case EventKind::Finished:
      break;
  }
}

void TreeTracker::end_step() {
  StepRecord rec;
  rec.t = t_;
  rec.incumbent = has_incumbent_ ? incumbent_ : kInf;
  rec.best_estimate_min = best_estimate_min();
  rec.rank1_size = rank1_size();
  rec.open_count = open_count();
  rec.lower_bound = lower_bound();
  rec.tree_weight = tree_weight_;
  history_.push_back(rec);
}

double TreeTracker::lower_bound() const { return open_bounds_.empty() ? kInf : *open_bounds_.begin(); }

double TreeTracker::best_estimate_min() const {
  return open_estimates_.empty() ? kInf : *open_estimates_.begin();
}

long TreeTracker::rank1_size() const {
  long count = 0;
  for (const auto& [id, info] : open_) {
    const auto d = static_cast<std::size_t>(info.depth);
    const double best = d < processed_min_estimate_.size() ? processed_min_estimate_[d] : kInf;
    if (info.estimate <= best) ++count;
  }
  return count;
}

std::optional<double> TreeTracker::median_open_bound() const {
  if (open_bounds_.empty()) return std::nullopt;
  const std::size_t n = open_bounds_.size();
  auto it = open_bounds_.begin();
  std::advance(it, static_cast<std::ptrdiff_t>((n - 1) / 2));
  if (n % 2 == 1) return *it;
  const double lo = *it;
  const double hi = *std::next(it);
  return 0.5 * (lo + hi);
}

void replay(const std::vector<TreeEvent>& events, TreeObserver& observer) {
  TreeTracker tracker;
  long open_step = 0;
  for (const auto& e : events) {
    const bool boundary = e.kind == EventKind::Finished ||
                          (e.kind == EventKind::NodeProcessed && e.t != open_step);
    if (boundary && open_step > 0) {
      tracker.end_step();
      observer.on_step(tracker);
      open_step = 0;
    }
    if (e.kind == EventKind::NodeProcessed) open_step = e.t;
    tracker.apply(e);
    observer.on_event(e);
  }
  if (open_step > 0) {
    tracker.end_step();
    observer.on_step(tracker);
  }
}

double prune_threshold(double incumbent) { return incumbent - 1e-9 * (1.0 + std::abs(incumbent)); }

PermutedInstance permute_instance(const MilpInstance& instance, std::uint64_t seed) {
  PermutedInstance out;
  const int n = instance.num_vars;
  out.var_order.resize(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) out.var_order[static_cast<std::size_t>(j)] = j;
  std::vector<int> row_order(static_cast<std::size_t>(instance.num_cons));
  for (int i = 0; i < instance.num_cons; ++i) row_order[static_cast<std::size_t>(i)] = i;
  if (seed != 0) {
    Rng rng(seed);
    rng.shuffle(std::span<int>(out.var_order));
    rng.shuffle(std::span<int>(row_order));
  }
  std::vector<int> new_index(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) new_index[static_cast<std::size_t>(out.var_order[static_cast<std::size_t>(k)])] = k;

  MilpInstance& p = out.instance;
  p = make_instance(instance.name, n);
  p.maximize_origin = instance.maximize_origin;
  p.continuous_set.clear();
  for (int k = 0; k < n; ++k) {
    const auto old = static_cast<std::size_t>(out.var_order[static_cast<std::size_t>(k)]);
    p.obj[static_cast<std::size_t>(k)] = instance.obj[old];
    p.var_lower[static_cast<std::size_t>(k)] = instance.var_lower[old];
    p.var_upper[static_cast<std::size_t>(k)] = instance.var_upper[old];
  }
  const auto mask = instance.integer_mask();
  for (int k = 0; k < n; ++k) {
    if (mask[static_cast<std::size_t>(out.var_order[static_cast<std::size_t>(k)])]) {
      p.integer_set.push_back(k);
    } else {
      p.continuous_set.push_back(k);
    }
  }
  for (const int i : row_order) {
    std::vector<RowEntry> row;
    for (const auto& e : instance.rows[static_cast<std::size_t>(i)]) {
      row.push_back({new_index[static_cast<std::size_t>(e.idx)], e.coef});
    }
    std::sort(row.begin(), row.end(), [](const RowEntry& a, const RowEntry& b) { return a.idx < b.idx; });
    p.add_ge_row(std::move(row), instance.rhs[static_cast<std::size_t>(i)]);
  }
  return out;
}

namespace {

class Engine {
 public:
  Engine(const MilpInstance& instance, const BnbParams& params, TreeObserver* observer)
      : inst_(instance),
        params_(params),
        observer_(observer),
        lp_(instance),
        mask_(instance.integer_mask()),
        pc_(Pseudocosts::for_instance(instance)) {}

  SolveResult run() {
    const auto start = std::chrono::steady_clock::now();
    nodes_.push_back(Node{});
    open_.push(0, -kInf, 0);
    parent_lp_.emplace_back();

    result_.proof = ProofStatus::OptimalityProved;
    while (!open_.empty()) {
      if (t_ >= params_.node_limit) {
        result_.proof = ProofStatus::NodeLimit;
        break;
      }
      if (std::isfinite(params_.time_limit_seconds)) {
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
        if (elapsed.count() >= params_.time_limit_seconds) {
          result_.proof = ProofStatus::TimeLimit;
          break;
        }
      }
      process(open_.select());
      tracker_.end_step();
      if (observer_ != nullptr) observer_->on_step(tracker_);
    }
    emit({.t = t_, .kind = EventKind::Finished, .z = has_incumbent_ ? incumbent_ : kInf});

    if (result_.proof == ProofStatus::OptimalityProved && !has_incumbent_) {
      throw InfeasibleInstance("instance '" + inst_.name + "' is infeasible");
    }
    result_.has_solution = has_incumbent_;
    result_.z_star = has_incumbent_ ? incumbent_ : kInf;
    result_.x_star = incumbent_x_;
    result_.node_count = t_;
    return std::move(result_);
  }

 private:
  void emit(TreeEvent e) {
    e.open_count = static_cast<long>(open_.size());
    tracker_.apply(e);
    result_.event_log.push_back(e);
    if (observer_ != nullptr) observer_->on_event(e);
  }

  void prune_leaf(Node& node, LeafReason reason, double bound) {
    node.status = NodeStatus::Leaf;
    node.leaf_reason = reason;
    emit({.t = t_, .kind = EventKind::Pruned, .node = node.id, .depth = node.depth, .z = bound,
          .aux = static_cast<int>(reason)});
  }

  void new_incumbent(int source, std::vector<double> x) {
    incumbent_ = objective_value(inst_, x);
    incumbent_x_ = std::move(x);
    has_incumbent_ = true;
    result_.incumbent_history.emplace_back(t_, incumbent_);
    emit({.t = t_, .kind = EventKind::NewIncumbent, .node = source, .z = incumbent_});
    for (const int id : open_.take_at_or_above(prune_threshold(incumbent_))) {
      auto& node = nodes_[static_cast<std::size_t>(id)];
      parent_lp_[static_cast<std::size_t>(id)].reset();
      prune_leaf(node, LeafReason::PrunedByBound, node.z_lp_parent);
    }
  }

  bool prunable(double z) const { return has_incumbent_ && z >= prune_threshold(incumbent_); }

  void process(int id) {
    open_.erase(id);
    ++t_;
    auto warm = std::move(parent_lp_[static_cast<std::size_t>(id)]);
    const BoundSet bounds = nodes_[static_cast<std::size_t>(id)].bounds;
    LpSolution lp = warm ? lp_.solve(bounds, *warm) : lp_.solve(bounds);
    warm.reset();

    Node& node = nodes_[static_cast<std::size_t>(id)];
    if (lp.status == LpStatus::Unbounded) {
      throw UnboundedRelaxation("node LP of '" + inst_.name + "' is unbounded");
    }
    if (lp.status == LpStatus::Infeasible) {
      emit({.t = t_, .kind = EventKind::NodeProcessed, .node = id, .depth = node.depth, .z = kInf});
      prune_leaf(node, LeafReason::Infeasible, kInf);
      return;
    }
    if (id == 0) result_.z_lp_root = lp.z_lp;
    if (node.branch_var >= 0) {
      const double delta_bound = node.branch_dir == BranchDirection::Down ? node.branch_frac : 1.0 - node.branch_frac;
      update_pseudocosts(pc_, node.branch_var, node.branch_dir, lp.z_lp - node.z_lp_parent, delta_bound);
    }
    emit({.t = t_, .kind = EventKind::NodeProcessed, .node = id, .depth = node.depth, .z = lp.z_lp});

    if (prunable(lp.z_lp)) {
      prune_leaf(node, LeafReason::PrunedByBound, lp.z_lp);
      return;
    }
    auto fractional = fractional_values(lp.x, mask_);
    if (fractional.empty()) {
      std::vector<double> x = lp.x;
      for (const int j : inst_.integer_set) x[static_cast<std::size_t>(j)] = std::round(x[static_cast<std::size_t>(j)]);
      if (!is_feasible(inst_, x)) x = lp.x;
      const double z = objective_value(inst_, x);
      prune_leaf(nodes_[static_cast<std::size_t>(id)], LeafReason::IntegerFeasible, lp.z_lp);
      if (!has_incumbent_ || z < prune_threshold(incumbent_)) new_incumbent(id, std::move(x));
      return;
    }
    if (t_ == 1 || (params_.heuristic_frequency > 0 && t_ % params_.heuristic_frequency == 0)) {
      if (auto x = rounding_heuristic(lp, inst_)) {
        const double z = objective_value(inst_, *x);
        if (!has_incumbent_ || z < prune_threshold(incumbent_)) new_incumbent(id, std::move(*x));
      }
      if (prunable(lp.z_lp)) {
        prune_leaf(nodes_[static_cast<std::size_t>(id)], LeafReason::PrunedByBound, lp.z_lp);
        return;
      }
    }
    branch(id, std::move(lp), fractional);
  }

  void branch(int id, LpSolution lp, const std::vector<FractionalValue>& fractional) {
    const int var = select_branching_variable(lp.x, mask_);
    const double value = lp.x[static_cast<std::size_t>(var)];
    const double frac = value - std::floor(value);

    // Children share the parent's estimate terms except the branching
    // variable, which is charged in its forced direction.
    const double base = node_estimate(lp.z_lp, fractional, pc_);
    const double own = std::min(pc_.down_cost(var) * frac, pc_.up_cost(var) * (1.0 - frac));
    const double est_down = std::max(lp.z_lp, base - own + pc_.down_cost(var) * frac);
    const double est_up = std::max(lp.z_lp, base - own + pc_.up_cost(var) * (1.0 - frac));

    const int down_id = static_cast<int>(nodes_.size());
    auto shared = std::make_shared<const LpSolution>(std::move(lp));
    Node& parent = nodes_[static_cast<std::size_t>(id)];
    parent.status = NodeStatus::Inner;
    const double z = shared->z_lp;
    const int depth = parent.depth;
    emit({.t = t_, .kind = EventKind::Branched, .node = id, .depth = depth, .z = z, .est_down = est_down,
          .est_up = est_up, .aux = down_id});

    for (int k = 0; k < 2; ++k) {
      Node child;
      child.id = down_id + k;
      child.parent_id = id;
      child.depth = depth + 1;
      child.bounds = nodes_[static_cast<std::size_t>(id)].bounds;
      const double inst_lo = inst_.var_lower[static_cast<std::size_t>(var)];
      const double inst_up = inst_.var_upper[static_cast<std::size_t>(var)];
      auto [lo, up] = child.bounds.overrides.count(var) ? child.bounds.overrides.at(var) : std::pair{inst_lo, inst_up};
      if (k == 0) {
        up = std::floor(value);
      } else {
        lo = std::ceil(value);
      }
      child.bounds.set(var, lo, up);
      child.z_lp_parent = z;
      child.estimate = k == 0 ? est_down : est_up;
      child.branch_var = var;
      child.branch_dir = k == 0 ? BranchDirection::Down : BranchDirection::Up;
      child.branch_frac = frac;
      open_.push(child.id, z, child.depth);
      nodes_.push_back(std::move(child));
      parent_lp_.push_back(shared);
    }
  }

  const MilpInstance& inst_;
  BnbParams params_;
  TreeObserver* observer_;
  SimplexSolver lp_;
  std::vector<char> mask_;
  Pseudocosts pc_;

  std::vector<Node> nodes_;
  std::vector<std::shared_ptr<const LpSolution>> parent_lp_;
  OpenQueue open_;
  TreeTracker tracker_;
  long t_ = 0;
  bool has_incumbent_ = false;
  double incumbent_ = kInf;
  std::vector<double> incumbent_x_;
  SolveResult result_;
};

}  // namespace

SolveResult solve(const MilpInstance& instance, const BnbParams& params, TreeObserver* observer) {
  if (params.seed == 0) return Engine(instance, params, observer).run();
  const auto permuted = permute_instance(instance, params.seed);
  SolveResult result = Engine(permuted.instance, params, observer).run();
  if (result.has_solution) {
    std::vector<double> x(result.x_star.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
      x[static_cast<std::size_t>(permuted.var_order[k])] = result.x_star[k];
    }
    result.x_star = std::move(x);
  }
  return result;
}

}  // namespace objval
