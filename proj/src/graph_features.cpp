#include "objval/graph_features.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "objval/errors.hpp"
#include "objval/text_io.hpp"

namespace objval {

namespace {
constexpr const char* kGraphFormat = "graph-v1";
constexpr double kTightTol = 1e-6;
}  // namespace

BipartiteGraph extract(const MilpInstance& inst, const LpSolution& lp) {
  if (lp.status != LpStatus::Optimal) throw std::invalid_argument("graph extraction needs an optimal root LP");
  const int n = inst.num_vars;
  const int m = inst.num_cons;

  double c_norm = 0.0;
  for (const double c : inst.obj) c_norm += c * c;
  c_norm = std::sqrt(c_norm);
  if (c_norm == 0.0) throw DegenerateNorm("objective vector is zero");

  BipartiteGraph g;
  g.z_lp_root = lp.z_lp;
  g.var_feats = Eigen::MatrixXd::Zero(n, kVarFeatureDim);
  g.cons_feats = Eigen::MatrixXd::Zero(m, kConsFeatureDim);

  const auto mask = inst.integer_mask();
  for (int j = 0; j < n; ++j) {
    const auto k = static_cast<std::size_t>(j);
    auto v = g.var_feats.row(j);
    v(kVarObjective) = inst.obj[k] / c_norm;
    v(kVarIsInteger) = mask[k] ? 1.0 : 0.0;
    v(kVarFiniteUpper) = std::isfinite(inst.var_upper[k]) ? 1.0 : 0.0;
    v(kVarLpValue) = lp.x[k];
    if (mask[k]) {
      const double f = lp.x[k] - std::floor(lp.x[k]);
      v(kVarFractionality) = std::min(f, 1.0 - f);
    }
    v(kVarReducedCost) = lp.reduced_costs[k] / c_norm;
    v(kVarBasic + static_cast<int>(lp.basis[k])) = 1.0;
  }

  std::vector<Eigen::Triplet<double>> triplets;
  for (int i = 0; i < m; ++i) {
    const auto& row = inst.rows[static_cast<std::size_t>(i)];
    double norm = 0.0;
    double dot_c = 0.0;
    for (const auto& e : row) {
      norm += e.coef * e.coef;
      dot_c += e.coef * inst.obj[static_cast<std::size_t>(e.idx)];
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) throw DegenerateNorm("row " + std::to_string(i) + " is zero");
    for (const auto& e : row) triplets.emplace_back(i, e.idx, e.coef / norm);

    const double b = inst.rhs[static_cast<std::size_t>(i)];
    auto c = g.cons_feats.row(i);
    c(kConsRhs) = b / norm;
    c(kConsDual) = lp.duals[static_cast<std::size_t>(i)] * norm / c_norm;
    c(kConsTight) = std::abs(row_activity(inst, i, lp.x) - b) <= kTightTol ? 1.0 : 0.0;
    c(kConsObjCosine) = dot_c / (norm * c_norm);
  }
  g.adjacency.resize(m, n);
  g.adjacency.setFromTriplets(triplets.begin(), triplets.end());
  g.adjacency.makeCompressed();
  return g;
}

namespace {

std::vector<double> flatten(const Eigen::MatrixXd& mat) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(mat.size()));
  for (Eigen::Index r = 0; r < mat.rows(); ++r) {
    for (Eigen::Index c = 0; c < mat.cols(); ++c) out.push_back(mat(r, c));
  }
  return out;
}

Eigen::MatrixXd unflatten(const std::vector<double>& values, Eigen::Index rows, Eigen::Index cols) {
  if (static_cast<Eigen::Index>(values.size()) != rows * cols) throw FormatError("feature array size mismatch");
  Eigen::MatrixXd mat(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) mat(r, c) = values[static_cast<std::size_t>(r * cols + c)];
  }
  return mat;
}

}  // namespace

std::string graph_to_string(const BipartiteGraph& g, const std::string& config_hash) {
  RecordWriter w(kGraphFormat, config_hash);
  w.put("dims", std::vector<double>{static_cast<double>(g.num_cons()), static_cast<double>(g.num_vars()),
                                    kConsFeatureDim, kVarFeatureDim});
  w.put("z_lp_root", std::vector<double>{g.z_lp_root});
  w.put("cons_feats", flatten(g.cons_feats));
  w.put("var_feats", flatten(g.var_feats));
  std::vector<double> triplets;
  for (Eigen::Index i = 0; i < g.adjacency.outerSize(); ++i) {
    for (SparseRowMatrix::InnerIterator it(g.adjacency, i); it; ++it) {
      triplets.push_back(static_cast<double>(it.row()));
      triplets.push_back(static_cast<double>(it.col()));
      triplets.push_back(it.value());
    }
  }
  w.put("adjacency", triplets);
  return w.text();
}

BipartiteGraph graph_from_string(const std::string& text) {
  const RecordReader r(text, kGraphFormat);
  const auto dims = r.doubles("dims");
  if (dims.size() != 4) throw FormatError("graph dims must have 4 entries");
  if (dims[2] != kConsFeatureDim || dims[3] != kVarFeatureDim) {
    throw FormatError("graph feature schema does not match this build");
  }
  const auto m = static_cast<Eigen::Index>(dims[0]);
  const auto n = static_cast<Eigen::Index>(dims[1]);
  BipartiteGraph g;
  g.z_lp_root = r.doubles("z_lp_root").at(0);
  g.cons_feats = unflatten(r.doubles("cons_feats"), m, kConsFeatureDim);
  g.var_feats = unflatten(r.doubles("var_feats"), n, kVarFeatureDim);
  const auto flat = r.doubles("adjacency");
  if (flat.size() % 3 != 0) throw FormatError("adjacency triplets malformed");
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t k = 0; k < flat.size(); k += 3) {
    const auto i = static_cast<Eigen::Index>(flat[k]);
    const auto j = static_cast<Eigen::Index>(flat[k + 1]);
    if (i < 0 || i >= m || j < 0 || j >= n) throw FormatError("adjacency index out of range");
    triplets.emplace_back(i, j, flat[k + 2]);
  }
  g.adjacency.resize(m, n);
  g.adjacency.setFromTriplets(triplets.begin(), triplets.end());
  g.adjacency.makeCompressed();
  return g;
}

}  // namespace objval
