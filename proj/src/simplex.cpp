#include "objval/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include <Eigen/Dense>

#include "objval/errors.hpp"
#include "objval/rng.hpp"

namespace objval {

namespace {

/// Basis factorization. Basic surplus columns are unit vectors, so only the
/// kernel formed by the basic structural columns and the rows whose surplus
/// is nonbasic needs a dense LU; a product-form eta file covers the pivots
/// since the last refactorization. Vectors in "position space" are indexed
/// by basis position, vectors in "row space" by constraint.
template <class Columns>
class BasisFactor {
 public:
  BasisFactor(int n, int m, const Columns& columns) : n_(n), m_(m), columns_(columns) {}

  bool factor(const std::vector<int>& head) {
    etas_.clear();
    slack_pos_.assign(static_cast<std::size_t>(m_), -1);
    struct_pos_.clear();
    struct_col_.clear();
    for (int r = 0; r < m_; ++r) {
      const int j = head[static_cast<std::size_t>(r)];
      if (j >= n_) {
        slack_pos_[static_cast<std::size_t>(j - n_)] = r;
      } else {
        struct_pos_.push_back(r);
        struct_col_.push_back(j);
      }
    }
    kernel_index_.assign(static_cast<std::size_t>(m_), -1);
    kernel_rows_.clear();
    for (int i = 0; i < m_; ++i) {
      if (slack_pos_[static_cast<std::size_t>(i)] < 0) {
        kernel_index_[static_cast<std::size_t>(i)] = static_cast<int>(kernel_rows_.size());
        kernel_rows_.push_back(i);
      }
    }
    const auto k = static_cast<Eigen::Index>(struct_col_.size());
    if (static_cast<Eigen::Index>(kernel_rows_.size()) != k) return false;
    if (k == 0) return true;
    Eigen::MatrixXd kernel = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index c = 0; c < k; ++c) {
      const auto& col = columns_[static_cast<std::size_t>(struct_col_[static_cast<std::size_t>(c)])];
      for (std::size_t e = 0; e < col.rows.size(); ++e) {
        const int ki = kernel_index_[static_cast<std::size_t>(col.rows[e])];
        if (ki >= 0) kernel(ki, c) = col.vals[e];
      }
    }
    lu_.compute(kernel);
    const auto diag = lu_.matrixLU().diagonal().cwiseAbs();
    return diag.minCoeff() > 1e-11 * std::max(1.0, diag.maxCoeff());
  }

  /// Row-space v -> position-space B^{-1} v.
  void ftran(Eigen::VectorXd& v) const {
    if (m_ == 0) return;
    const auto k = static_cast<Eigen::Index>(struct_col_.size());
    Eigen::VectorXd xs(k);
    for (Eigen::Index c = 0; c < k; ++c) xs[c] = v[kernel_rows_[static_cast<std::size_t>(c)]];
    if (k > 0) xs = lu_.solve(xs);
    Eigen::VectorXd out(m_);
    // Surplus rows: A_i,S x_S - s_i = v_i.
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(m_);
    for (Eigen::Index c = 0; c < k; ++c) {
      out[struct_pos_[static_cast<std::size_t>(c)]] = xs[c];
      if (xs[c] == 0.0) continue;
      const auto& col = columns_[static_cast<std::size_t>(struct_col_[static_cast<std::size_t>(c)])];
      for (std::size_t e = 0; e < col.rows.size(); ++e) acc[col.rows[e]] += col.vals[e] * xs[c];
    }
    for (int i = 0; i < m_; ++i) {
      const int pos = slack_pos_[static_cast<std::size_t>(i)];
      if (pos >= 0) out[pos] = acc[i] - v[i];
    }
    v = std::move(out);
    for (const auto& eta : etas_) {
      const double pivot = v[eta.row] / eta.col[eta.row];
      if (pivot != 0.0) v -= pivot * eta.col;
      v[eta.row] = pivot;
    }
  }

  /// Position-space v -> row-space B^{-T} v.
  void btran(Eigen::VectorXd& v) const {
    if (m_ == 0) return;
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      const double dot = it->col.dot(v) - it->col[it->row] * v[it->row];
      v[it->row] = (v[it->row] - dot) / it->col[it->row];
    }
    Eigen::VectorXd y = Eigen::VectorXd::Zero(m_);
    for (int i = 0; i < m_; ++i) {
      const int pos = slack_pos_[static_cast<std::size_t>(i)];
      if (pos >= 0) y[i] = -v[pos];
    }
    const auto k = static_cast<Eigen::Index>(struct_col_.size());
    if (k > 0) {
      Eigen::VectorXd rhs(k);
      for (Eigen::Index c = 0; c < k; ++c) {
        double r = v[struct_pos_[static_cast<std::size_t>(c)]];
        const auto& col = columns_[static_cast<std::size_t>(struct_col_[static_cast<std::size_t>(c)])];
        for (std::size_t e = 0; e < col.rows.size(); ++e) {
          if (kernel_index_[static_cast<std::size_t>(col.rows[e])] < 0) r -= col.vals[e] * y[col.rows[e]];
        }
        rhs[c] = r;
      }
      rhs = lu_.transpose().solve(rhs);
      for (Eigen::Index c = 0; c < k; ++c) y[kernel_rows_[static_cast<std::size_t>(c)]] = rhs[c];
    }
    v = std::move(y);
  }

  void push_eta(int row, const Eigen::VectorXd& alpha) { etas_.push_back({row, alpha}); }
  std::size_t eta_count() const { return etas_.size(); }

 private:
  struct Eta {
    int row;
    Eigen::VectorXd col;
  };

  int n_;
  int m_;
  const Columns& columns_;
  std::vector<int> slack_pos_;     // per row: basis position of its surplus, or -1
  std::vector<int> struct_pos_;    // per kernel column: basis position
  std::vector<int> struct_col_;    // per kernel column: structural index
  std::vector<int> kernel_index_;  // per row: kernel row index, or -1
  std::vector<int> kernel_rows_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  std::vector<Eta> etas_;
};

}  // namespace

SimplexSolver::SimplexSolver(const MilpInstance& instance, SimplexOptions options)
    : instance_(instance), options_(options) {
  const int n = instance.num_vars;
  const int m = instance.num_cons;
  columns_.resize(static_cast<std::size_t>(n + m));
  for (int i = 0; i < m; ++i) {
    for (const auto& e : instance.rows[static_cast<std::size_t>(i)]) {
      if (e.coef == 0.0) continue;
      auto& col = columns_[static_cast<std::size_t>(e.idx)];
      col.rows.push_back(i);
      col.vals.push_back(e.coef);
    }
    columns_[static_cast<std::size_t>(n + i)].rows.push_back(i);
    columns_[static_cast<std::size_t>(n + i)].vals.push_back(-1.0);
  }
}

LpSolution SimplexSolver::solve(const BoundSet& bounds) const { return run(bounds, nullptr); }

LpSolution SimplexSolver::solve(const BoundSet& bounds, const LpSolution& warm) const {
  if (warm.status != LpStatus::Optimal || warm.basis.size() != static_cast<std::size_t>(instance_.num_vars) ||
      warm.row_basis.size() != static_cast<std::size_t>(instance_.num_cons)) {
    return run(bounds, nullptr);
  }
  try {
    return run(bounds, &warm);
  } catch (const NumericalBreakdown&) {
    return run(bounds, nullptr);
  }
}

LpSolution SimplexSolver::run(const BoundSet& bounds, const LpSolution* warm) const {
  const int n = instance_.num_vars;
  const int m = instance_.num_cons;
  const int total = n + m;
  const auto N = static_cast<std::size_t>(total);
  const double ptol = options_.primal_tol;
  const double dtol = options_.dual_tol;
  const long max_iter = options_.max_iterations > 0 ? options_.max_iterations : 50L * std::max(total, 1);
  const long stall_limit = options_.stall_limit > 0 ? options_.stall_limit : 3L * std::max(total, 1);

  std::vector<double> lo(N, 0.0), up(N, kInf), cost(N, 0.0);
  for (int j = 0; j < n; ++j) {
    lo[static_cast<std::size_t>(j)] = instance_.var_lower[static_cast<std::size_t>(j)];
    up[static_cast<std::size_t>(j)] = instance_.var_upper[static_cast<std::size_t>(j)];
    cost[static_cast<std::size_t>(j)] = instance_.obj[static_cast<std::size_t>(j)];
  }
  LpSolution result;
  for (const auto& [j, b] : bounds.overrides) {
    auto& l = lo[static_cast<std::size_t>(j)];
    auto& u = up[static_cast<std::size_t>(j)];
    l = std::max(l, b.first);
    u = std::min(u, b.second);
    if (l > u) {
      result.status = LpStatus::Infeasible;
      return result;
    }
  }

  std::vector<BasisStatus> status(N, BasisStatus::AtLower);
  std::vector<double> x(N, 0.0);
  std::vector<int> head;
  head.reserve(static_cast<std::size_t>(m));

  auto place_nonbasic = [&](std::size_t j, BasisStatus preferred) {
    const bool lo_ok = std::isfinite(lo[j]);
    const bool up_ok = std::isfinite(up[j]);
    if (preferred == BasisStatus::AtUpper && up_ok) {
      status[j] = BasisStatus::AtUpper;
      x[j] = up[j];
    } else if (lo_ok) {
      status[j] = BasisStatus::AtLower;
      x[j] = lo[j];
    } else if (up_ok) {
      status[j] = BasisStatus::AtUpper;
      x[j] = up[j];
    } else {
      status[j] = BasisStatus::NonbasicFree;
      x[j] = 0.0;
    }
  };

  auto cold_basis = [&] {
    head.clear();
    for (std::size_t j = 0; j < static_cast<std::size_t>(n); ++j) place_nonbasic(j, BasisStatus::AtLower);
    for (int i = 0; i < m; ++i) {
      status[static_cast<std::size_t>(n + i)] = BasisStatus::Basic;
      head.push_back(n + i);
    }
  };

  if (warm != nullptr) {
    for (std::size_t j = 0; j < N; ++j) {
      const BasisStatus s = j < static_cast<std::size_t>(n) ? warm->basis[j]
                                                             : warm->row_basis[j - static_cast<std::size_t>(n)];
      if (s == BasisStatus::Basic) {
        status[j] = BasisStatus::Basic;
        head.push_back(static_cast<int>(j));
      } else {
        place_nonbasic(j, s);
      }
    }
    if (head.size() != static_cast<std::size_t>(m)) cold_basis();
  } else {
    cold_basis();
  }

  BasisFactor<std::vector<Column>> factor(n, m, columns_);
  if (!factor.factor(head)) {
    if (warm == nullptr) throw NumericalBreakdown("singular initial basis");
    cold_basis();
    if (!factor.factor(head)) throw NumericalBreakdown("singular initial basis");
  }

  auto recompute_basics = [&] {
    Eigen::VectorXd rhs(m);
    for (int i = 0; i < m; ++i) rhs[i] = instance_.rhs[static_cast<std::size_t>(i)];
    for (std::size_t j = 0; j < N; ++j) {
      if (status[j] == BasisStatus::Basic || x[j] == 0.0) continue;
      const auto& col = columns_[j];
      for (std::size_t k = 0; k < col.rows.size(); ++k) rhs[col.rows[k]] -= col.vals[k] * x[j];
    }
    factor.ftran(rhs);
    for (int r = 0; r < m; ++r) x[static_cast<std::size_t>(head[static_cast<std::size_t>(r)])] = rhs[r];
  };
  auto refactor = [&] {
    if (!factor.factor(head)) throw NumericalBreakdown("singular basis on refactorization");
    recompute_basics();
  };
  recompute_basics();

  auto column_dot = [&](std::size_t j, const Eigen::VectorXd& y) {
    const auto& col = columns_[j];
    double s = 0.0;
    for (std::size_t k = 0; k < col.rows.size(); ++k) s += col.vals[k] * y[col.rows[k]];
    return s;
  };

  // Stalling on a degenerate vertex: relax every finite bound by a small
  // random amount, optimize, then restore the bounds and clean up.
  const long perturb_after =
      options_.perturb_after > 0 ? options_.perturb_after : std::max(50L, static_cast<long>(total) / 5);
  const std::vector<double> lo0 = lo, up0 = up;
  bool perturbed = false;
  int perturb_rounds = 0;
  auto reset_nonbasics = [&] {
    for (std::size_t j = 0; j < N; ++j) {
      if (status[j] == BasisStatus::AtLower) x[j] = lo[j];
      else if (status[j] == BasisStatus::AtUpper) x[j] = up[j];
    }
    if (!factor.factor(head)) throw NumericalBreakdown("singular basis on refactorization");
    recompute_basics();
  };
  auto perturb = [&] {
    Rng rng(0x5eed + static_cast<std::uint64_t>(perturb_rounds));
    for (std::size_t j = 0; j < N; ++j) {
      if (lo[j] == up[j]) continue;
      if (std::isfinite(lo[j])) lo[j] -= 1e-6 * (1.0 + std::abs(lo[j])) * (1.0 + rng.uniform());
      if (std::isfinite(up[j])) up[j] += 1e-6 * (1.0 + std::abs(up[j])) * (1.0 + rng.uniform());
    }
    perturbed = true;
    ++perturb_rounds;
    reset_nonbasics();
  };
  auto unperturb = [&] {
    lo = lo0;
    up = up0;
    perturbed = false;
    reset_nonbasics();
  };

  Eigen::VectorXd y(m), alpha(m);
  std::vector<double> phase_cost(static_cast<std::size_t>(m));
  long iter = 0;
  long stall = 0;
  bool bland = false;
  int last_phase = 0;
  double best_objective = kInf;
  bool verified_once = false;

  for (;;) {
    // Basic infeasibilities decide the phase.
    double infeasibility = 0.0;
    for (int r = 0; r < m; ++r) {
      const auto j = static_cast<std::size_t>(head[static_cast<std::size_t>(r)]);
      double c = 0.0;
      if (x[j] < lo[j] - ptol) {
        c = -1.0;
        infeasibility += lo[j] - x[j];
      } else if (x[j] > up[j] + ptol) {
        c = 1.0;
        infeasibility += x[j] - up[j];
      }
      phase_cost[static_cast<std::size_t>(r)] = c;
    }
    const bool phase1 = infeasibility > 0.0;
    for (int r = 0; r < m; ++r) {
      y[r] = phase1 ? phase_cost[static_cast<std::size_t>(r)]
                    : cost[static_cast<std::size_t>(head[static_cast<std::size_t>(r)])];
    }

    double objective = infeasibility;
    if (!phase1) {
      objective = 0.0;
      for (std::size_t j = 0; j < N; ++j) objective += cost[j] * x[j];
    }
    const int phase = phase1 ? 1 : 2;
    if (phase != last_phase) {
      last_phase = phase;
      best_objective = kInf;
    }
    if (best_objective == kInf || objective < best_objective - 1e-12 * (1.0 + std::abs(best_objective))) {
      best_objective = objective;
      stall = 0;
      bland = false;
    } else if (++stall > perturb_after && !perturbed && perturb_rounds < 2) {
      perturb();
      best_objective = kInf;
      stall = 0;
      continue;
    } else if (stall > stall_limit) {
      bland = true;
    }

    factor.btran(y);

    // Pricing.
    int entering = -1;
    double entering_dir = 0.0;
    double best_score = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      if (status[j] == BasisStatus::Basic || lo[j] == up[j]) continue;
      const double d = (phase1 ? 0.0 : cost[j]) - column_dot(j, y);
      double dir = 0.0;
      if (status[j] == BasisStatus::AtLower && d < -dtol) dir = 1.0;
      else if (status[j] == BasisStatus::AtUpper && d > dtol) dir = -1.0;
      else if (status[j] == BasisStatus::NonbasicFree && std::abs(d) > dtol) dir = d < 0 ? 1.0 : -1.0;
      if (dir == 0.0) continue;
      if (bland) {
        entering = static_cast<int>(j);
        entering_dir = dir;
        break;
      }
      if (std::abs(d) > best_score) {
        best_score = std::abs(d);
        entering = static_cast<int>(j);
        entering_dir = dir;
      }
    }

    if (entering < 0) {
      if (perturbed) {
        unperturb();
        best_objective = kInf;
        stall = 0;
        continue;
      }
      if (!verified_once && factor.eta_count() > 0) {
        verified_once = true;
        refactor();
        continue;
      }
      result.status = phase1 ? LpStatus::Infeasible : LpStatus::Optimal;
      break;
    }
    verified_once = false;

    if (++iter > max_iter) {
      throw NumericalBreakdown("simplex exceeded " + std::to_string(max_iter) + " pivots");
    }

    const auto q = static_cast<std::size_t>(entering);
    alpha.setZero();
    {
      const auto& col = columns_[q];
      for (std::size_t k = 0; k < col.rows.size(); ++k) alpha[col.rows[k]] = col.vals[k];
    }
    factor.ftran(alpha);

    // Ratio test. delta_r is the rate of change of basic r per unit step.
    struct Limit {
      double exact;
      double relaxed;
      BasisStatus leave_as;
    };
    auto limit_of = [&](int r, double delta) -> std::optional<Limit> {
      const auto j = static_cast<std::size_t>(head[static_cast<std::size_t>(r)]);
      const double v = x[j];
      if (phase1 && v < lo[j] - ptol) {
        if (delta <= 0) return std::nullopt;
        return Limit{(lo[j] - v) / delta, (lo[j] - v + ptol) / delta, BasisStatus::AtLower};
      }
      if (phase1 && v > up[j] + ptol) {
        if (delta >= 0) return std::nullopt;
        return Limit{(v - up[j]) / -delta, (v - up[j] + ptol) / -delta, BasisStatus::AtUpper};
      }
      if (delta < 0 && std::isfinite(lo[j])) {
        return Limit{std::max(0.0, (v - lo[j]) / -delta), (v - lo[j] + ptol) / -delta, BasisStatus::AtLower};
      }
      if (delta > 0 && std::isfinite(up[j])) {
        return Limit{std::max(0.0, (up[j] - v) / delta), (up[j] - v + ptol) / delta, BasisStatus::AtUpper};
      }
      return std::nullopt;
    };

    const double flip_range = up[q] - lo[q];
    int leave_row = -1;
    BasisStatus leave_as = BasisStatus::AtLower;
    double theta = kInf;
    if (bland) {
      for (int r = 0; r < m; ++r) {
        if (std::abs(alpha[r]) <= options_.pivot_tol) continue;
        const auto lim = limit_of(r, -entering_dir * alpha[r]);
        if (!lim) continue;
        if (leave_row < 0 || lim->exact < theta - 1e-12 ||
            (lim->exact <= theta + 1e-12 &&
             head[static_cast<std::size_t>(r)] < head[static_cast<std::size_t>(leave_row)])) {
          theta = leave_row < 0 ? lim->exact : std::min(theta, lim->exact);
          leave_row = r;
          leave_as = lim->leave_as;
        }
      }
    } else {
      double relaxed_max = kInf;
      for (int r = 0; r < m; ++r) {
        if (std::abs(alpha[r]) <= options_.pivot_tol) continue;
        const auto lim = limit_of(r, -entering_dir * alpha[r]);
        if (lim) relaxed_max = std::min(relaxed_max, lim->relaxed);
      }
      double best_alpha = 0.0;
      for (int r = 0; r < m; ++r) {
        if (std::abs(alpha[r]) <= options_.pivot_tol) continue;
        const auto lim = limit_of(r, -entering_dir * alpha[r]);
        if (!lim || lim->exact > relaxed_max) continue;
        if (std::abs(alpha[r]) > best_alpha) {
          best_alpha = std::abs(alpha[r]);
          leave_row = r;
          leave_as = lim->leave_as;
          theta = lim->exact;
        }
      }
    }

    const bool flip = std::isfinite(flip_range) && (leave_row < 0 || flip_range <= theta);
    if (flip) {
      theta = flip_range;
    } else if (leave_row < 0) {
      if (phase1) throw NumericalBreakdown("unbounded phase-1 ray");
      result.status = LpStatus::Unbounded;
      break;
    }

    if (theta > 0.0) {
      x[q] += entering_dir * theta;
      for (int r = 0; r < m; ++r) {
        if (alpha[r] != 0.0) x[static_cast<std::size_t>(head[static_cast<std::size_t>(r)])] -= entering_dir * theta * alpha[r];
      }
    }
    if (flip) {
      status[q] = entering_dir > 0 ? BasisStatus::AtUpper : BasisStatus::AtLower;
      x[q] = entering_dir > 0 ? up[q] : lo[q];
      continue;
    }

    const auto leaving = static_cast<std::size_t>(head[static_cast<std::size_t>(leave_row)]);
    status[leaving] = leave_as;
    x[leaving] = leave_as == BasisStatus::AtLower ? lo[leaving] : up[leaving];
    status[q] = BasisStatus::Basic;
    head[static_cast<std::size_t>(leave_row)] = entering;
    factor.push_eta(leave_row, alpha);
    if (factor.eta_count() >= static_cast<std::size_t>(options_.refactor_interval)) refactor();
  }

  result.iterations = iter;
  if (result.status != LpStatus::Optimal) return result;

  // Final duals with phase-2 costs.
  for (int r = 0; r < m; ++r) y[r] = cost[static_cast<std::size_t>(head[static_cast<std::size_t>(r)])];
  factor.btran(y);

  result.x.assign(x.begin(), x.begin() + n);
  result.duals.assign(y.data(), y.data() + m);
  result.reduced_costs.resize(static_cast<std::size_t>(n));
  for (std::size_t j = 0; j < static_cast<std::size_t>(n); ++j) {
    result.reduced_costs[j] = status[j] == BasisStatus::Basic ? 0.0 : cost[j] - column_dot(j, y);
  }
  result.basis.assign(status.begin(), status.begin() + n);
  result.row_basis.assign(status.begin() + n, status.end());
  result.z_lp = objective_value(instance_, result.x);
  return result;
}

LpSolution solve_lp(const MilpInstance& instance, const BoundSet& bounds) {
  return SimplexSolver(instance).solve(bounds);
}

LpSolution resolve_from_basis(const MilpInstance& instance, const LpSolution& prev,
                              const BoundSet& changed_bounds) {
  return SimplexSolver(instance).solve(changed_bounds, prev);
}

}  // namespace objval
