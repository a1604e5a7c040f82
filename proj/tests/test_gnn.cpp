#include <gtest/gtest.h>

#include <cmath>

#include "objval/errors.hpp"
#include "objval/gnn.hpp"
#include "oracles.hpp"

namespace objval {
namespace {

GnnModel zero_model(int h, TargetKind target) {
  GnnModel m = GnnModel::initialized(h, target, 1);
  for (auto& block : m.params) block.setZero();
  return m;
}

TEST(Gnn, ZeroWeightsGiveZero) {
  Rng rng(1);
  const auto g = oracle::random_graph(rng, 4, 6);
  EXPECT_EQ(forward(zero_model(8, TargetKind::Absolute), g), 0.0);
}

TEST(Gnn, HandComputedScalarModel) {
  // h = 1, one constraint, one variable, every weight 1 except as noted.
  GnnModel m = zero_model(1, TargetKind::Absolute);
  m.params[kConsW1].setZero();
  m.params[kConsW1](0, 0) = 1.0;  // picks constraint feature 0
  m.params[kConsW2](0, 0) = 2.0;
  m.params[kVarW1](0, 1) = 1.0;   // picks variable feature 1
  m.params[kVarW2](0, 0) = 1.0;
  m.params[kVarB2](0, 0) = 0.5;
  m.params[kMsgConsSelf](0, 0) = 1.0;
  m.params[kMsgConsNbr](0, 0) = 3.0;
  m.params[kMsgVarSelf](0, 0) = -1.0;
  m.params[kMsgVarNbr](0, 0) = 2.0;
  m.params[kHeadW1](0, 0) = 1.0;
  m.params[kHeadB1](0, 0) = -1.0;
  m.params[kHeadW2](0, 0) = 4.0;
  m.params[kHeadB2](0, 0) = 0.25;

  BipartiteGraph g;
  g.cons_feats = Eigen::MatrixXd::Zero(1, kConsFeatureDim);
  g.var_feats = Eigen::MatrixXd::Zero(1, kVarFeatureDim);
  g.cons_feats(0, 0) = 1.5;
  g.var_feats(0, 1) = 2.0;
  g.adjacency.resize(1, 1);
  g.adjacency.insert(0, 0) = 0.5;

  // c = relu(2 * relu(1.5)) = 3;  v = relu(relu(2) + 0.5) = 2.5
  // c' = 3 + 3 * 0.5 * 2.5 = 6.75;  v' = -2.5 + 2 * 0.5 * 6.75 = 4.25
  // head: relu(4.25 - 1) = 3.25;  out = 4 * 3.25 + 0.25 = 13.25
  EXPECT_DOUBLE_EQ(forward(m, g), 13.25);
}

TEST(Gnn, OutputBiasGradientIsResidual) {
  Rng rng(5);
  const auto g = oracle::random_graph(rng, 3, 4);
  const auto m = GnnModel::initialized(4, TargetKind::Absolute, 9);
  const double out = forward(m, g);
  GnnParams grads;
  const double loss = loss_and_gradients(m, {&g}, {1.0}, grads);
  EXPECT_DOUBLE_EQ(loss, (out - 1.0) * (out - 1.0));
  EXPECT_NEAR(grads[kHeadB2](0, 0), 2.0 * (out - 1.0), 1e-12);
}

TEST(Gnn, ExactFitHasZeroGradient) {
  Rng rng(6);
  const auto g = oracle::random_graph(rng, 3, 5);
  const auto m = GnnModel::initialized(4, TargetKind::Absolute, 2);
  GnnParams grads;
  EXPECT_EQ(loss_and_gradients(m, {&g}, {forward(m, g)}, grads), 0.0);
  for (const auto& block : grads) EXPECT_EQ(block.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Gnn, GradientsMatchFiniteDifferences) {
  for (std::uint64_t cfg = 0; cfg < 5; ++cfg) {
    Rng rng(100 + cfg);
    const auto g1 = oracle::random_graph(rng, 3, 4);
    const auto g2 = oracle::random_graph(rng, 2, 5);
    const auto m = oracle::random_gnn(rng, 3, TargetKind::Absolute);
    EXPECT_LT(oracle::gnn_gradient_error(m, {&g1, &g2}, {0.3, -0.7}), 1e-4) << "config " << cfg;
  }
}

TEST(Gnn, PermutationInvariance) {
  Rng rng(8);
  const auto g = oracle::random_graph(rng, 4, 5);
  const auto m = GnnModel::initialized(6, TargetKind::Absolute, 3);
  const std::vector<int> vp{3, 0, 4, 1, 2};
  const std::vector<int> rp{2, 3, 1, 0};
  BipartiteGraph p;
  p.cons_feats.resize(4, kConsFeatureDim);
  p.var_feats.resize(5, kVarFeatureDim);
  Eigen::MatrixXd a = Eigen::MatrixXd(g.adjacency), ap(4, 5);
  for (int k = 0; k < 5; ++k) p.var_feats.row(k) = g.var_feats.row(vp[static_cast<std::size_t>(k)]);
  for (int r = 0; r < 4; ++r) {
    p.cons_feats.row(r) = g.cons_feats.row(rp[static_cast<std::size_t>(r)]);
    for (int k = 0; k < 5; ++k) ap(r, k) = a(rp[static_cast<std::size_t>(r)], vp[static_cast<std::size_t>(k)]);
  }
  p.adjacency = ap.sparseView();
  EXPECT_NEAR(forward(m, p), forward(m, g), 1e-12);
}

TEST(Gnn, DuplicatingVariablesWithoutVariableMessages) {
  // Sum aggregation doubles the variable-to-constraint message when every
  // variable is duplicated, so the invariance holds once that weight is 0.
  Rng rng(9);
  const auto g = oracle::random_graph(rng, 3, 4);
  auto m = GnnModel::initialized(5, TargetKind::Absolute, 4);
  m.params[kMsgConsNbr].setZero();
  BipartiteGraph d;
  d.cons_feats = g.cons_feats;
  d.var_feats.resize(8, kVarFeatureDim);
  d.var_feats << g.var_feats, g.var_feats;
  const Eigen::MatrixXd a = Eigen::MatrixXd(g.adjacency);
  Eigen::MatrixXd ad(3, 8);
  ad << a, a;
  d.adjacency = ad.sparseView();
  EXPECT_NEAR(forward(m, d), forward(m, g), 1e-12);
}

TEST(Gnn, PredictObjectiveInversion) {
  Rng rng(10);
  auto g = oracle::random_graph(rng, 2, 3);
  g.z_lp_root = 200.0;
  auto m = zero_model(4, TargetKind::Offset);
  EXPECT_DOUBLE_EQ(predict_objective(m, g), 200.0);
  m.target = TargetKind::Ratio;
  m.target_mean = 1.0;
  EXPECT_DOUBLE_EQ(predict_objective(m, g), 200.0);
  m.target_mean = 1.1;
  EXPECT_NEAR(predict_objective(m, g), 220.0, 1e-12);
  g.z_lp_root = 1e-7;
  EXPECT_THROW(predict_objective(m, g), DegenerateLp);
  EXPECT_THROW(make_target(TargetKind::Ratio, 5.0, 0.0), DegenerateLp);
  EXPECT_DOUBLE_EQ(make_target(TargetKind::Offset, 7.0, 5.0), 2.0);
}

TEST(Gnn, DimensionMismatch) {
  Rng rng(12);
  auto g = oracle::random_graph(rng, 2, 3);
  g.var_feats.conservativeResize(3, 4);
  EXPECT_THROW(forward(GnnModel::initialized(4, TargetKind::Absolute, 1), g), DimensionMismatch);
}

std::vector<RegressionSample> synthetic_set(std::uint64_t seed, int count, bool constant) {
  Rng rng(seed);
  std::vector<RegressionSample> out;
  for (int k = 0; k < count; ++k) {
    RegressionSample s;
    s.graph = oracle::random_graph(rng, 3, 4);
    s.z_lp = s.graph.z_lp_root;
    s.z_star = constant ? 42.0 : s.z_lp + s.graph.var_feats(0, 0);
    out.push_back(std::move(s));
  }
  return out;
}

TEST(Gnn, LearnsConstantLabel) {
  GnnHyperparams hp;
  hp.hidden = 8;
  hp.target = TargetKind::Absolute;
  hp.epochs = 60;
  hp.lr = 1e-2;
  const auto train = synthetic_set(1, 40, true);
  const auto val = synthetic_set(2, 10, true);
  const auto res = train_gnn(train, val, hp);
  for (const auto& s : val) EXPECT_LT(std::abs(predict_objective(res.model, s.graph) - 42.0) / 42.0, 1e-3);
}

TEST(Gnn, TrainingIsDeterministicAndReducesLoss) {
  GnnHyperparams hp;
  hp.hidden = 8;
  hp.epochs = 30;
  hp.lr = 5e-3;
  hp.seed = 7;
  const auto train = synthetic_set(3, 48, false);
  const auto val = synthetic_set(4, 12, false);
  const auto a = train_gnn(train, val, hp);
  const auto b = train_gnn(train, val, hp);
  EXPECT_EQ(a.train_loss, b.train_loss);
  EXPECT_EQ(a.val_loss, b.val_loss);
  EXPECT_EQ(gnn_to_string(a.model), gnn_to_string(b.model));
  EXPECT_LT(a.train_loss.back(), a.train_loss.front());
  EXPECT_THROW(train_gnn(synthetic_set(5, 9, false), {}, hp), ConfigError);
}

TEST(Gnn, DivergenceIsReported) {
  GnnHyperparams hp;
  hp.hidden = 8;
  hp.epochs = 50;
  hp.lr = 1e300;
  EXPECT_THROW(train_gnn(synthetic_set(6, 20, false), {}, hp), Diverged);
}

TEST(Gnn, SerializationRoundTrip) {
  GnnHyperparams hp;
  hp.hidden = 6;
  hp.epochs = 3;
  hp.target = TargetKind::Ratio;
  const auto res = train_gnn(synthetic_set(8, 20, false), {}, hp);
  const auto text = gnn_to_string(res.model, "h");
  const auto back = gnn_from_string(text);
  EXPECT_EQ(gnn_to_string(back, "h"), text);
  Rng rng(3);
  const auto g = oracle::random_graph(rng, 3, 4);
  EXPECT_EQ(predict_objective(back, g), predict_objective(res.model, g));
  EXPECT_THROW(gnn_from_string("gnn-v0 x\n"), FormatError);
}

}  // namespace
}  // namespace objval
