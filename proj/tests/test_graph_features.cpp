#include <gtest/gtest.h>

#include <numeric>

#include "objval/errors.hpp"
#include "objval/graph_features.hpp"
#include "objval/instance_gen.hpp"
#include "objval/rng.hpp"
#include "objval/simplex.hpp"

namespace objval {
namespace {

TEST(GraphFeatures, SingleVariableHandComputed) {
  MilpInstance inst = make_instance("one", 1);
  inst.obj = {1.0};
  inst.integer_set = {0};
  inst.continuous_set = {};
  inst.add_ge_row({{0, 1.0}}, 1.0);
  const auto lp = solve_lp(inst);
  ASSERT_EQ(lp.status, LpStatus::Optimal);
  const auto g = extract(inst, lp);
  Eigen::RowVectorXd v(kVarFeatureDim);
  v << 1, 1, 0, 1, 0, 0, 1, 0, 0, 0;
  Eigen::RowVectorXd c(kConsFeatureDim);
  c << 1, 1, 1, 1;
  EXPECT_EQ(g.var_feats.row(0), v);
  EXPECT_EQ(g.cons_feats.row(0), c);
  EXPECT_DOUBLE_EQ(g.adjacency.coeff(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(g.z_lp_root, 1.0);
}

TEST(GraphFeatures, RowNormalization) {
  MilpInstance inst = make_instance("norm", 2);
  inst.obj = {3.0, 4.0};
  inst.add_ge_row({{0, 3.0}, {1, 4.0}}, 10.0);
  const auto g = extract(inst, solve_lp(inst));
  EXPECT_DOUBLE_EQ(g.adjacency.coeff(0, 0), 0.6);
  EXPECT_DOUBLE_EQ(g.adjacency.coeff(0, 1), 0.8);
  EXPECT_DOUBLE_EQ(g.cons_feats(0, kConsRhs), 2.0);
  EXPECT_NEAR(g.cons_feats(0, kConsObjCosine), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(g.var_feats(0, kVarObjective), 0.6);
}

TEST(GraphFeatures, DegenerateNorms) {
  MilpInstance inst = make_instance("zero", 1);
  inst.add_ge_row({{0, 1.0}}, 1.0);
  EXPECT_THROW(extract(inst, solve_lp(inst)), DegenerateNorm);
}

/// Applies explicit variable and row permutations to an instance and to an
/// LP solution of it.
struct Permuted {
  MilpInstance inst;
  LpSolution lp;
};

Permuted permute(const MilpInstance& inst, const LpSolution& lp, const std::vector<int>& var_perm,
                 const std::vector<int>& row_perm) {
  // var_perm[k] = original index of new variable k; likewise for rows.
  std::vector<int> new_index(var_perm.size());
  for (std::size_t k = 0; k < var_perm.size(); ++k) new_index[static_cast<std::size_t>(var_perm[k])] = static_cast<int>(k);
  Permuted p{make_instance(inst.name, inst.num_vars), lp};
  const auto mask = inst.integer_mask();
  p.inst.integer_set.clear();
  p.inst.continuous_set.clear();
  for (std::size_t k = 0; k < var_perm.size(); ++k) {
    const auto j = static_cast<std::size_t>(var_perm[k]);
    p.inst.obj[k] = inst.obj[j];
    p.inst.var_lower[k] = inst.var_lower[j];
    p.inst.var_upper[k] = inst.var_upper[j];
    (mask[j] ? p.inst.integer_set : p.inst.continuous_set).push_back(static_cast<int>(k));
    p.lp.x[k] = lp.x[j];
    p.lp.reduced_costs[k] = lp.reduced_costs[j];
    p.lp.basis[k] = lp.basis[j];
  }
  for (std::size_t r = 0; r < row_perm.size(); ++r) {
    const auto i = static_cast<std::size_t>(row_perm[r]);
    std::vector<RowEntry> row;
    for (const auto& e : inst.rows[i]) row.push_back({new_index[static_cast<std::size_t>(e.idx)], e.coef});
    p.inst.add_ge_row(row, inst.rhs[i]);
    p.lp.duals[r] = lp.duals[i];
  }
  return p;
}

TEST(GraphFeatures, PermutationEquivariance) {
  const auto inst = generate(preset(Family::Gisp, Scale::Tiny, 3));
  const auto lp = solve_lp(inst);
  const auto g = extract(inst, lp);
  Rng rng(11);
  std::vector<int> vp(static_cast<std::size_t>(inst.num_vars)), rp(static_cast<std::size_t>(inst.num_cons));
  std::iota(vp.begin(), vp.end(), 0);
  std::iota(rp.begin(), rp.end(), 0);
  rng.shuffle(std::span<int>(vp));
  rng.shuffle(std::span<int>(rp));
  const auto p = permute(inst, lp, vp, rp);
  const auto gp = extract(p.inst, p.lp);
  const Eigen::MatrixXd a = Eigen::MatrixXd(g.adjacency);
  const Eigen::MatrixXd ap = Eigen::MatrixXd(gp.adjacency);
  for (int k = 0; k < inst.num_vars; ++k) {
    EXPECT_EQ(gp.var_feats.row(k), g.var_feats.row(vp[static_cast<std::size_t>(k)]));
  }
  for (int r = 0; r < inst.num_cons; ++r) {
    EXPECT_EQ(gp.cons_feats.row(r), g.cons_feats.row(rp[static_cast<std::size_t>(r)]));
    for (int k = 0; k < inst.num_vars; ++k) {
      EXPECT_EQ(ap(r, k), a(rp[static_cast<std::size_t>(r)], vp[static_cast<std::size_t>(k)]));
    }
  }
}

TEST(GraphFeatures, StructureMatchesInstance) {
  for (const Family f : {Family::SetCovering, Family::CombAuction, Family::Gisp}) {
    const auto inst = generate(preset(f, Scale::Desk, 4));
    const auto g = extract(inst, solve_lp(inst));
    EXPECT_EQ(g.var_feats.col(kVarIsInteger).sum(), static_cast<double>(inst.integer_set.size()));
    long nnz = 0;
    for (const auto& row : inst.rows) nnz += static_cast<long>(row.size());
    EXPECT_EQ(g.adjacency.nonZeros(), nnz);
    EXPECT_TRUE(g.var_feats.allFinite());
    EXPECT_TRUE(g.cons_feats.allFinite());
    // Exactly one basis flag per variable.
    EXPECT_EQ(g.var_feats.middleCols(kVarBasic, 4).rowwise().sum(), Eigen::VectorXd::Ones(inst.num_vars));
  }
}

TEST(GraphFeatures, SerializationRoundTripAndVersionCheck) {
  const auto inst = generate(preset(Family::CombAuction, Scale::Desk, 2));
  const auto g = extract(inst, solve_lp(inst));
  const auto text = graph_to_string(g, "abc");
  const auto back = graph_from_string(text);
  EXPECT_EQ(back.var_feats, g.var_feats);
  EXPECT_EQ(back.cons_feats, g.cons_feats);
  EXPECT_EQ(Eigen::MatrixXd(back.adjacency), Eigen::MatrixXd(g.adjacency));
  EXPECT_EQ(back.z_lp_root, g.z_lp_root);
  EXPECT_EQ(graph_to_string(back, "abc"), text);

  std::string wrong = text;
  wrong.replace(0, 8, "graph-v0");
  EXPECT_THROW(graph_from_string(wrong), FormatError);
}

}  // namespace
}  // namespace objval
