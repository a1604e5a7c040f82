#pragma once

// Independent reference computations used by the test suites. Nothing here
// calls into the simplex or branch-and-bound code paths.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "objval/gnn.hpp"
#include "objval/model.hpp"
#include "objval/rng.hpp"

namespace objval::oracle {

struct VertexResult {
  bool feasible = false;
  double objective = 0.0;
  std::vector<double> x;
};

/// Minimizes c.x over {A x >= b, lower <= x <= upper} by enumerating every
/// choice of n tight constraints. The feasible region must be pointed and the
/// LP bounded for the answer to be the optimum.
inline VertexResult enumerate_vertices(const MilpInstance& inst) {
  const int n = inst.num_vars;
  struct Plane {
    Eigen::VectorXd a;
    double b;
  };
  std::vector<Plane> planes;
  for (int i = 0; i < inst.num_cons; ++i) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
    for (const auto& e : inst.rows[static_cast<std::size_t>(i)]) a[e.idx] += e.coef;
    planes.push_back({a, inst.rhs[static_cast<std::size_t>(i)]});
  }
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
    a[j] = 1.0;
    if (std::isfinite(inst.var_lower[static_cast<std::size_t>(j)])) planes.push_back({a, inst.var_lower[static_cast<std::size_t>(j)]});
    if (std::isfinite(inst.var_upper[static_cast<std::size_t>(j)])) planes.push_back({a, inst.var_upper[static_cast<std::size_t>(j)]});
  }
  VertexResult best;
  std::vector<int> pick;
  std::function<void(int)> rec = [&](int start) {
    if (static_cast<int>(pick.size()) == n) {
      Eigen::MatrixXd M(n, n);
      Eigen::VectorXd rhs(n);
      for (int k = 0; k < n; ++k) {
        M.row(k) = planes[static_cast<std::size_t>(pick[static_cast<std::size_t>(k)])].a.transpose();
        rhs[k] = planes[static_cast<std::size_t>(pick[static_cast<std::size_t>(k)])].b;
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
      if (lu.rank() < n) return;
      const Eigen::VectorXd v = lu.solve(rhs);
      std::vector<double> x(v.data(), v.data() + n);
      for (int j = 0; j < n; ++j) {
        if (x[static_cast<std::size_t>(j)] < inst.var_lower[static_cast<std::size_t>(j)] - 1e-9 ||
            x[static_cast<std::size_t>(j)] > inst.var_upper[static_cast<std::size_t>(j)] + 1e-9) return;
      }
      for (int i = 0; i < inst.num_cons; ++i) {
        if (row_activity(inst, i, x) < inst.rhs[static_cast<std::size_t>(i)] - 1e-9) return;
      }
      const double z = objective_value(inst, x);
      if (!best.feasible || z < best.objective) best = {true, z, x};
      return;
    }
    for (int p = start; p < static_cast<int>(planes.size()); ++p) {
      pick.push_back(p);
      rec(p + 1);
      pick.pop_back();
    }
  };
  rec(0);
  return best;
}

struct BruteResult {
  bool feasible = false;
  double objective = 0.0;
  std::vector<double> x;
};

/// Exhaustive search over every 0/1 assignment of a pure binary instance.
/// The objective is summed in index order.
inline BruteResult enumerate_binary(const MilpInstance& inst) {
  const int n = inst.num_vars;
  BruteResult best;
  std::vector<double> x(static_cast<std::size_t>(n), 0.0);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    for (int j = 0; j < n; ++j) x[static_cast<std::size_t>(j)] = (mask >> j) & 1U ? 1.0 : 0.0;
    bool ok = true;
    for (int i = 0; i < inst.num_cons && ok; ++i) {
      ok = row_activity(inst, i, x) >= inst.rhs[static_cast<std::size_t>(i)] - 1e-9;
    }
    if (!ok) continue;
    const double z = objective_value(inst, x);
    if (!best.feasible || z < best.objective) best = {true, z, x};
  }
  return best;
}

/// Random LP: A in [-1, 3], b in [0, 4]. With `upper` every variable gets an
/// upper bound in [1, 4] and c has mixed signs; otherwise c >= 0 keeps the LP
/// bounded over x >= 0.
inline MilpInstance random_lp(Rng& rng, int m, int n, bool upper) {
  MilpInstance inst = make_instance("rand_lp", n);
  for (int j = 0; j < n; ++j) {
    inst.obj[static_cast<std::size_t>(j)] = upper ? rng.uniform(-3.0, 3.0) : rng.uniform(0.1, 3.0);
    if (upper) inst.var_upper[static_cast<std::size_t>(j)] = rng.uniform(1.0, 4.0);
  }
  for (int i = 0; i < m; ++i) {
    std::vector<RowEntry> row;
    for (int j = 0; j < n; ++j) {
      if (rng.bernoulli(0.7)) row.push_back({j, rng.uniform(-1.0, 3.0)});
    }
    if (row.empty()) row.push_back({static_cast<int>(rng.uniform_int(0, n - 1)), 1.0});
    inst.add_ge_row(std::move(row), rng.uniform(0.0, 4.0));
  }
  return inst;
}


/// Random graph with dense features in [-1, 1] and adjacency density 0.5
/// (at least one entry per variable column).
inline BipartiteGraph random_graph(Rng& rng, int m, int n) {
  BipartiteGraph g;
  g.cons_feats = Eigen::MatrixXd(m, kConsFeatureDim);
  g.var_feats = Eigen::MatrixXd(n, kVarFeatureDim);
  for (Eigen::Index k = 0; k < g.cons_feats.size(); ++k) g.cons_feats.data()[k] = rng.uniform(-1.0, 1.0);
  for (Eigen::Index k = 0; k < g.var_feats.size(); ++k) g.var_feats.data()[k] = rng.uniform(-1.0, 1.0);
  std::vector<Eigen::Triplet<double>> trip;
  for (int j = 0; j < n; ++j) {
    const int forced = static_cast<int>(rng.uniform_int(0, m - 1));
    for (int i = 0; i < m; ++i) {
      if (i == forced || rng.bernoulli(0.5)) trip.emplace_back(i, j, rng.uniform(-1.0, 1.0));
    }
  }
  g.adjacency.resize(m, n);
  g.adjacency.setFromTriplets(trip.begin(), trip.end());
  g.z_lp_root = rng.uniform(1.0, 10.0);
  return g;
}

/// Model with every block, biases included, uniform in [-1, 1]; keeps
/// pre-activations off the ReLU kink with probability 1.
inline GnnModel random_gnn(Rng& rng, int hidden, TargetKind target) {
  GnnModel m = GnnModel::initialized(hidden, target, rng());
  for (auto& block : m.params) {
    for (Eigen::Index e = 0; e < block.size(); ++e) block.data()[e] = rng.uniform(-1.0, 1.0);
  }
  return m;
}

/// Largest relative error between analytic GNN gradients and central
/// differences with step `step`, over every parameter entry. The relative
/// error of an entry is |a - f| / max(|a|, |f|, 1e-6).
inline double gnn_gradient_error(const GnnModel& model, const std::vector<const BipartiteGraph*>& batch,
                                 const std::vector<double>& targets, double step = 1e-4) {
  GnnParams analytic;
  loss_and_gradients(model, batch, targets, analytic);
  auto loss = [&](const GnnModel& m) {
    double l = 0.0;
    for (std::size_t k = 0; k < batch.size(); ++k) {
      const double d = forward(m, *batch[k]) - targets[k];
      l += d * d;
    }
    return l / static_cast<double>(batch.size());
  };
  double worst = 0.0;
  GnnModel probe = model;
  for (int b = 0; b < kNumGnnBlocks; ++b) {
    for (Eigen::Index e = 0; e < probe.params[b].size(); ++e) {
      double& w = probe.params[b].data()[e];
      const double orig = w;
      w = orig + step;
      const double up = loss(probe);
      w = orig - step;
      const double down = loss(probe);
      w = orig;
      const double fd = (up - down) / (2.0 * step);
      const double a = analytic[b].data()[e];
      worst = std::max(worst, std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-6}));
    }
  }
  return worst;
}

}  // namespace objval::oracle
