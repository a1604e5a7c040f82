#pragma once

#include <string>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "objval/model.hpp"

namespace objval {

inline constexpr int kVarFeatureDim = 10;
inline constexpr int kConsFeatureDim = 4;

/// Column order of the variable feature matrix.
enum VarFeature {
  kVarObjective = 0,   // c_j / ||c||
  kVarIsInteger,
  kVarFiniteUpper,
  kVarLpValue,
  kVarFractionality,   // min(f, 1 - f), 0 for continuous variables
  kVarReducedCost,     // d_j / ||c||
  kVarBasic,
  kVarAtLower,
  kVarAtUpper,
  kVarFree,
};

/// Column order of the constraint feature matrix.
enum ConsFeature {
  kConsRhs = 0,        // b_i / ||A_i||
  kConsDual,           // y_i ||A_i|| / ||c||
  kConsTight,          // 1 when |A_i x - b_i| <= 1e-6
  kConsObjCosine,      // cos(A_i, c)
};

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Root-node bipartite encoding: constraints x features, variables x
/// features and the row-normalized coefficient matrix. Carries no incumbent
/// information.
struct BipartiteGraph {
  Eigen::MatrixXd cons_feats;  ///< m x kConsFeatureDim
  Eigen::MatrixXd var_feats;   ///< n x kVarFeatureDim
  SparseRowMatrix adjacency;   ///< m x n, entries a_ij / ||A_i||
  double z_lp_root = 0.0;

  int num_cons() const { return static_cast<int>(cons_feats.rows()); }
  int num_vars() const { return static_cast<int>(var_feats.rows()); }
};

/// Throws DegenerateNorm when ||c|| = 0 or some row is all zero, and
/// std::invalid_argument when the LP is not Optimal.
BipartiteGraph extract(const MilpInstance& instance, const LpSolution& root_lp);

/// graph-v1 text; reading rejects other versions with FormatError.
std::string graph_to_string(const BipartiteGraph& graph, const std::string& config_hash = "");
BipartiteGraph graph_from_string(const std::string& text);

}  // namespace objval
