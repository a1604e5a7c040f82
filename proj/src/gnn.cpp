#include "objval/gnn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>

#include "objval/errors.hpp"
#include "objval/rng.hpp"
#include "objval/text_io.hpp"

namespace objval {

namespace {

constexpr const char* kGnnFormat = "gnn-v1";
constexpr double kRatioLpTol = 1e-6;
constexpr double kAdamEps = 1e-8;

using Eigen::MatrixXd;

MatrixXd relu(const MatrixXd& x) { return x.cwiseMax(0.0); }

/// Gradient of relu at pre-activation `pre`, applied to `upstream`.
MatrixXd relu_back(const MatrixXd& upstream, const MatrixXd& pre) {
  return upstream.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
}

/// Intermediate values of one forward pass, kept for the backward pass.
struct Trace {
  MatrixXd cons_in, var_in;
  MatrixXd cons_pre1, cons_h1, cons_pre2, cons_emb;
  MatrixXd var_pre1, var_h1, var_pre2, var_emb;
  MatrixXd agg_vars;    // A * var_emb
  MatrixXd cons_upd;    // updated constraint descriptors
  MatrixXd agg_cons;    // A^T * cons_upd
  MatrixXd var_upd;     // updated variable descriptors
  MatrixXd head_pre, head_h;
  double output = 0.0;
};

MatrixXd affine(const MatrixXd& x, const MatrixXd& w, const MatrixXd& b) {
  MatrixXd out = x * w.transpose();
  out.rowwise() += b.col(0).transpose();
  return out;
}

MatrixXd standardize(const MatrixXd& x, const Standardizer& s) {
  if (s.mean.size() == 0) return x;
  return ((x.rowwise() - s.mean).array().rowwise() / s.std.array()).matrix();
}

void check_dims(const GnnModel& model, const BipartiteGraph& g) {
  const auto& p = model.params;
  if (g.cons_feats.cols() != p[kConsW1].cols() || g.var_feats.cols() != p[kVarW1].cols()) {
    throw DimensionMismatch("graph feature widths do not match the model");
  }
  if (g.adjacency.rows() != g.cons_feats.rows() || g.adjacency.cols() != g.var_feats.rows()) {
    throw DimensionMismatch("adjacency shape does not match feature matrices");
  }
  if (g.var_feats.rows() == 0) throw DimensionMismatch("graph has no variables");
}

void run_forward(const GnnModel& model, const BipartiteGraph& g, Trace& tr) {
  const auto& p = model.params;
  tr.cons_in = standardize(g.cons_feats, model.cons_stats);
  tr.var_in = standardize(g.var_feats, model.var_stats);

  tr.cons_pre1 = affine(tr.cons_in, p[kConsW1], p[kConsB1]);
  tr.cons_h1 = relu(tr.cons_pre1);
  tr.cons_pre2 = affine(tr.cons_h1, p[kConsW2], p[kConsB2]);
  tr.cons_emb = relu(tr.cons_pre2);

  tr.var_pre1 = affine(tr.var_in, p[kVarW1], p[kVarB1]);
  tr.var_h1 = relu(tr.var_pre1);
  tr.var_pre2 = affine(tr.var_h1, p[kVarW2], p[kVarB2]);
  tr.var_emb = relu(tr.var_pre2);

  tr.agg_vars = g.adjacency * tr.var_emb;
  tr.cons_upd = tr.cons_emb * p[kMsgConsSelf].transpose() + tr.agg_vars * p[kMsgConsNbr].transpose();
  tr.agg_cons = g.adjacency.transpose() * tr.cons_upd;
  tr.var_upd = tr.var_emb * p[kMsgVarSelf].transpose() + tr.agg_cons * p[kMsgVarNbr].transpose();

  tr.head_pre = affine(tr.var_upd, p[kHeadW1], p[kHeadB1]);
  tr.head_h = relu(tr.head_pre);
  const MatrixXd per_var = affine(tr.head_h, p[kHeadW2], p[kHeadB2]);
  tr.output = per_var.mean();
}

/// Accumulates d output / d params scaled by `scale` into `grads`.
void run_backward(const GnnModel& model, const BipartiteGraph& g, const Trace& tr, double scale,
                  GnnParams& grads) {
  const auto& p = model.params;
  const auto n = static_cast<double>(tr.var_upd.rows());

  const MatrixXd d_per_var = MatrixXd::Constant(tr.var_upd.rows(), 1, scale / n);
  grads[kHeadW2] += d_per_var.transpose() * tr.head_h;
  grads[kHeadB2] += d_per_var.colwise().sum().transpose();
  const MatrixXd d_head_pre = relu_back(d_per_var * p[kHeadW2], tr.head_pre);
  grads[kHeadW1] += d_head_pre.transpose() * tr.var_upd;
  grads[kHeadB1] += d_head_pre.colwise().sum().transpose();
  const MatrixXd d_var_upd = d_head_pre * p[kHeadW1];

  grads[kMsgVarSelf] += d_var_upd.transpose() * tr.var_emb;
  grads[kMsgVarNbr] += d_var_upd.transpose() * tr.agg_cons;
  MatrixXd d_var_emb = d_var_upd * p[kMsgVarSelf];
  const MatrixXd d_agg_cons = d_var_upd * p[kMsgVarNbr];
  const MatrixXd d_cons_upd = g.adjacency * d_agg_cons;

  grads[kMsgConsSelf] += d_cons_upd.transpose() * tr.cons_emb;
  grads[kMsgConsNbr] += d_cons_upd.transpose() * tr.agg_vars;
  const MatrixXd d_cons_emb = d_cons_upd * p[kMsgConsSelf];
  const MatrixXd d_agg_vars = d_cons_upd * p[kMsgConsNbr];
  d_var_emb += g.adjacency.transpose() * d_agg_vars;

  const MatrixXd d_var_pre2 = relu_back(d_var_emb, tr.var_pre2);
  grads[kVarW2] += d_var_pre2.transpose() * tr.var_h1;
  grads[kVarB2] += d_var_pre2.colwise().sum().transpose();
  const MatrixXd d_var_pre1 = relu_back(d_var_pre2 * p[kVarW2], tr.var_pre1);
  grads[kVarW1] += d_var_pre1.transpose() * tr.var_in;
  grads[kVarB1] += d_var_pre1.colwise().sum().transpose();

  const MatrixXd d_cons_pre2 = relu_back(d_cons_emb, tr.cons_pre2);
  grads[kConsW2] += d_cons_pre2.transpose() * tr.cons_h1;
  grads[kConsB2] += d_cons_pre2.colwise().sum().transpose();
  const MatrixXd d_cons_pre1 = relu_back(d_cons_pre2 * p[kConsW2], tr.cons_pre1);
  grads[kConsW1] += d_cons_pre1.transpose() * tr.cons_in;
  grads[kConsB1] += d_cons_pre1.colwise().sum().transpose();
}

GnnParams zeros_like(const GnnParams& p) {
  GnnParams z;
  for (int b = 0; b < kNumGnnBlocks; ++b) z[b] = MatrixXd::Zero(p[b].rows(), p[b].cols());
  return z;
}

Standardizer column_stats(const std::vector<const MatrixXd*>& mats, Eigen::Index cols) {
  Standardizer s;
  s.mean = Eigen::RowVectorXd::Zero(cols);
  s.std = Eigen::RowVectorXd::Zero(cols);
  double count = 0.0;
  for (const auto* m : mats) {
    s.mean += m->colwise().sum();
    count += static_cast<double>(m->rows());
  }
  if (count > 0) s.mean /= count;
  for (const auto* m : mats) s.std += (m->rowwise() - s.mean).array().square().matrix().colwise().sum();
  for (Eigen::Index c = 0; c < cols; ++c) {
    const double sd = count > 0 ? std::sqrt(s.std(c) / count) : 0.0;
    s.std(c) = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

}  // namespace

const char* to_string(TargetKind kind) {
  switch (kind) {
    case TargetKind::Absolute: return "t1";
    case TargetKind::Ratio: return "t2";
    case TargetKind::Offset: return "t3";
  }
  return "?";
}

TargetKind parse_target_kind(const std::string& text) {
  if (text == "t1" || text == "absolute") return TargetKind::Absolute;
  if (text == "t2" || text == "ratio") return TargetKind::Ratio;
  if (text == "t3" || text == "offset") return TargetKind::Offset;
  throw ConfigError("unknown target '" + text + "' (expected t1, t2 or t3)");
}

const char* block_name(int block) {
  static constexpr const char* kNames[kNumGnnBlocks] = {
      "cons_w1", "cons_b1", "cons_w2", "cons_b2", "var_w1", "var_b1", "var_w2", "var_b2",
      "msg_cons_self", "msg_cons_nbr", "msg_var_self", "msg_var_nbr",
      "head_w1", "head_b1", "head_w2", "head_b2"};
  return kNames[block];
}

GnnModel GnnModel::initialized(int hidden, TargetKind target, std::uint64_t seed) {
  if (hidden < 1) throw ConfigError("hidden dimension must be >= 1");
  GnnModel m;
  m.hidden = hidden;
  m.target = target;
  const int h = hidden;
  const std::array<std::pair<int, int>, kNumGnnBlocks> shapes = {{
      {h, kConsFeatureDim}, {h, 1}, {h, h}, {h, 1},
      {h, kVarFeatureDim}, {h, 1}, {h, h}, {h, 1},
      {h, h}, {h, h}, {h, h}, {h, h},
      {h, h}, {h, 1}, {1, h}, {1, 1}}};
  Rng rng(seed);
  for (int b = 0; b < kNumGnnBlocks; ++b) {
    const auto [rows, cols] = shapes[static_cast<std::size_t>(b)];
    m.params[b] = MatrixXd::Zero(rows, cols);
    const bool is_bias = b == kConsB1 || b == kConsB2 || b == kVarB1 || b == kVarB2 || b == kHeadB1 || b == kHeadB2;
    if (is_bias) continue;
    const double limit = std::sqrt(6.0 / (rows + cols));
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) m.params[b](r, c) = rng.uniform(-limit, limit);
    }
  }
  return m;
}

double forward(const GnnModel& model, const BipartiteGraph& graph) {
  check_dims(model, graph);
  Trace tr;
  run_forward(model, graph, tr);
  return tr.output;
}

double make_target(TargetKind kind, double z_star, double z_lp) {
  switch (kind) {
    case TargetKind::Absolute: return z_star;
    case TargetKind::Ratio:
      if (std::abs(z_lp) <= kRatioLpTol) throw DegenerateLp("ratio target needs |z_lp| > 1e-6");
      return z_star / z_lp;
    case TargetKind::Offset: return z_star - z_lp;
  }
  return z_star;
}

double invert_target(TargetKind kind, double value, double z_lp) {
  switch (kind) {
    case TargetKind::Absolute: return value;
    case TargetKind::Ratio:
      if (std::abs(z_lp) <= kRatioLpTol) throw DegenerateLp("ratio target needs |z_lp| > 1e-6");
      return value * z_lp;
    case TargetKind::Offset: return value + z_lp;
  }
  return value;
}

double predict_objective(const GnnModel& model, const BipartiteGraph& graph) {
  const double raw = forward(model, graph) * model.target_std + model.target_mean;
  return invert_target(model.target, raw, graph.z_lp_root);
}

double loss_and_gradients(const GnnModel& model, const std::vector<const BipartiteGraph*>& batch,
                          const std::vector<double>& std_targets, GnnParams& grads) {
  if (batch.empty() || batch.size() != std_targets.size()) {
    throw std::invalid_argument("batch must be nonempty and aligned with its targets");
  }
  grads = zeros_like(model.params);
  const double inv = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  Trace tr;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    check_dims(model, *batch[k]);
    run_forward(model, *batch[k], tr);
    const double diff = tr.output - std_targets[k];
    loss += diff * diff * inv;
    run_backward(model, *batch[k], tr, 2.0 * diff * inv, grads);
  }
  return loss;
}

namespace {

double mean_loss(const GnnModel& model, const std::vector<const BipartiteGraph*>& graphs,
                 const std::vector<double>& targets) {
  if (graphs.empty()) return 0.0;
  double loss = 0.0;
  Trace tr;
  for (std::size_t k = 0; k < graphs.size(); ++k) {
    run_forward(model, *graphs[k], tr);
    const double diff = tr.output - targets[k];
    loss += diff * diff;
  }
  return loss / static_cast<double>(graphs.size());
}

}  // namespace

GnnTrainResult train_gnn(const std::vector<RegressionSample>& train,
                         const std::vector<RegressionSample>& val, const GnnHyperparams& hp) {
  if (train.size() < 10) throw ConfigError("GNN training needs at least 10 samples");
  if (hp.batch_size < 1 || hp.epochs < 1) throw ConfigError("batch size and epochs must be >= 1");

  GnnModel model = GnnModel::initialized(hp.hidden, hp.target, derive_seed(hp.seed, 1));

  std::vector<const MatrixXd*> cons_mats, var_mats;
  std::vector<double> raw_targets;
  for (const auto& s : train) {
    cons_mats.push_back(&s.graph.cons_feats);
    var_mats.push_back(&s.graph.var_feats);
    raw_targets.push_back(make_target(hp.target, s.z_star, s.z_lp));
  }
  model.cons_stats = column_stats(cons_mats, kConsFeatureDim);
  model.var_stats = column_stats(var_mats, kVarFeatureDim);
  const double count = static_cast<double>(raw_targets.size());
  model.target_mean = std::accumulate(raw_targets.begin(), raw_targets.end(), 0.0) / count;
  double var = 0.0;
  for (const double y : raw_targets) var += (y - model.target_mean) * (y - model.target_mean);
  const double sd = std::sqrt(var / count);
  model.target_std = sd > 1e-12 ? sd : 1.0;

  auto standardized = [&](const std::vector<RegressionSample>& set) {
    std::vector<double> out;
    for (const auto& s : set) {
      out.push_back((make_target(hp.target, s.z_star, s.z_lp) - model.target_mean) / model.target_std);
    }
    return out;
  };
  std::vector<const BipartiteGraph*> train_graphs, val_graphs;
  for (const auto& s : train) train_graphs.push_back(&s.graph);
  for (const auto& s : val) val_graphs.push_back(&s.graph);
  const auto train_targets = standardized(train);
  const auto val_targets = standardized(val);

  GnnParams m1 = zeros_like(model.params);
  GnnParams m2 = zeros_like(model.params);
  GnnParams grads;
  long step = 0;
  Rng rng(derive_seed(hp.seed, 2));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  GnnTrainResult result;
  result.model = model;
  double best = kInf;
  int since_best = 0;
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(hp.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(hp.batch_size));
      std::vector<const BipartiteGraph*> batch;
      std::vector<double> targets;
      for (std::size_t k = start; k < stop; ++k) {
        batch.push_back(train_graphs[order[k]]);
        targets.push_back(train_targets[order[k]]);
      }
      const double loss = loss_and_gradients(model, batch, targets, grads);
      if (!std::isfinite(loss)) throw Diverged("training loss became non-finite at epoch " + std::to_string(epoch));
      ++step;
      const double c1 = 1.0 - std::pow(hp.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(hp.beta2, static_cast<double>(step));
      for (int b = 0; b < kNumGnnBlocks; ++b) {
        m1[b] = hp.beta1 * m1[b] + (1.0 - hp.beta1) * grads[b];
        m2[b] = hp.beta2 * m2[b] + (1.0 - hp.beta2) * grads[b].cwiseProduct(grads[b]);
        model.params[b].array() -=
            hp.lr * (m1[b].array() / c1) / ((m2[b].array() / c2).sqrt() + kAdamEps);
      }
    }
    const double train_loss = mean_loss(model, train_graphs, train_targets);
    if (!std::isfinite(train_loss)) throw Diverged("training loss became non-finite at epoch " + std::to_string(epoch));
    result.train_loss.push_back(train_loss);
    const double monitored = val.empty() ? train_loss : mean_loss(model, val_graphs, val_targets);
    if (!val.empty()) result.val_loss.push_back(monitored);
    if (monitored < best) {
      best = monitored;
      since_best = 0;
      result.model = model;
      result.best_epoch = epoch;
    } else if (++since_best >= hp.patience) {
      break;
    }
  }
  return result;
}

std::string gnn_to_string(const GnnModel& model, const std::string& config_hash) {
  RecordWriter w(kGnnFormat, config_hash);
  w.put("hidden", static_cast<long>(model.hidden));
  w.put("target", to_string(model.target));
  w.put("target_stats", std::vector<double>{model.target_mean, model.target_std});
  auto row = [](const Eigen::RowVectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  w.put("cons_mean", row(model.cons_stats.mean));
  w.put("cons_std", row(model.cons_stats.std));
  w.put("var_mean", row(model.var_stats.mean));
  w.put("var_std", row(model.var_stats.std));
  for (int b = 0; b < kNumGnnBlocks; ++b) {
    const auto& mat = model.params[b];
    std::vector<double> flat{static_cast<double>(mat.rows()), static_cast<double>(mat.cols())};
    for (Eigen::Index r = 0; r < mat.rows(); ++r) {
      for (Eigen::Index c = 0; c < mat.cols(); ++c) flat.push_back(mat(r, c));
    }
    w.put(block_name(b), flat);
  }
  return w.text();
}

GnnModel gnn_from_string(const std::string& text) {
  const RecordReader r(text, kGnnFormat);
  GnnModel m = GnnModel::initialized(static_cast<int>(r.integer("hidden")), parse_target_kind(r.token("target")), 0);
  const auto ts = r.doubles("target_stats");
  if (ts.size() != 2 || !(ts[1] > 0.0)) throw FormatError("target_stats must be mean and positive std");
  m.target_mean = ts[0];
  m.target_std = ts[1];
  auto row = [&](const char* key, Eigen::Index expect) {
    const auto v = r.doubles(key);
    if (static_cast<Eigen::Index>(v.size()) != expect) throw FormatError(std::string("bad length for ") + key);
    return Eigen::RowVectorXd(Eigen::Map<const Eigen::RowVectorXd>(v.data(), expect));
  };
  m.cons_stats = {row("cons_mean", kConsFeatureDim), row("cons_std", kConsFeatureDim)};
  m.var_stats = {row("var_mean", kVarFeatureDim), row("var_std", kVarFeatureDim)};
  for (int b = 0; b < kNumGnnBlocks; ++b) {
    const auto flat = r.doubles(block_name(b));
    auto& mat = m.params[b];
    if (flat.size() < 2 || flat[0] != static_cast<double>(mat.rows()) || flat[1] != static_cast<double>(mat.cols()) ||
        flat.size() != static_cast<std::size_t>(2 + mat.size())) {
      throw FormatError(std::string("bad shape for block ") + block_name(b));
    }
    for (Eigen::Index rr = 0; rr < mat.rows(); ++rr) {
      for (Eigen::Index c = 0; c < mat.cols(); ++c) mat(rr, c) = flat[static_cast<std::size_t>(2 + rr * mat.cols() + c)];
    }
  }
  return m;
}

}  // namespace objval
