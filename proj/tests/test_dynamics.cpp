#include <gtest/gtest.h>

#include <cmath>

#include <Eigen/Dense>

#include "objval/dynamics.hpp"
#include "objval/errors.hpp"
#include "objval/instance_gen.hpp"

namespace objval {
namespace {

TEST(Dynamics, Gap) {
  EXPECT_EQ(gap(kInf, 5.0), 1.0);
  EXPECT_EQ(gap(10.0, 5.0), 0.5);
  EXPECT_EQ(gap(4.0, -1.0), 1.0);
  EXPECT_EQ(gap(4.0, -kInf), 1.0);
  EXPECT_EQ(gap(4.0, kInf), 0.0);
  EXPECT_EQ(gap(-10.0, -12.0), 2.0 / 12.0);
  EXPECT_EQ(gap(0.0, 0.0), 0.0);
}

TEST(Dynamics, TreeWeight) {
  EXPECT_EQ(tree_weight({0}), 1.0);
  EXPECT_EQ(tree_weight({1, 2, 2}), 1.0);
  EXPECT_EQ(tree_weight({}), 0.0);
}

TEST(Dynamics, MedianGap) {
  EXPECT_EQ(median_gap(10.0, 8.0, 20.0, 5.0), 2.0 / 15.0);
  EXPECT_EQ(median_gap(10.0, std::nullopt, 20.0, 5.0), 0.0);
  EXPECT_EQ(median_gap(10.0, 8.0, 5.0, 5.0), 0.0);
  TreeTracker tr;
  tr.apply({.t = 1, .kind = EventKind::NodeProcessed, .node = 0, .depth = 0, .z = 6.0});
  tr.apply({.t = 1, .kind = EventKind::Branched, .node = 0, .depth = 0, .z = 6.0, .est_down = 7.0, .est_up = 7.0, .aux = 1});
  tr.apply({.t = 2, .kind = EventKind::NodeProcessed, .node = 1, .depth = 1, .z = 8.0});
  tr.apply({.t = 2, .kind = EventKind::Branched, .node = 1, .depth = 1, .z = 8.0, .est_down = 9.0, .est_up = 9.0, .aux = 3});
  // Open bounds {6, 8, 8}.
  EXPECT_EQ(*tr.median_open_bound(), 8.0);
  tr.apply({.t = 3, .kind = EventKind::NodeProcessed, .node = 3, .depth = 2, .z = 8.0});
  tr.apply({.t = 3, .kind = EventKind::Pruned, .node = 3, .depth = 2, .z = 8.0, .aux = 1});
  // Open bounds {6, 8}: even size takes the mean of the middle two.
  EXPECT_EQ(*tr.median_open_bound(), 7.0);
}

TEST(Dynamics, OpenTrend) {
  std::vector<double> constant(21, 4.0);
  EXPECT_EQ(open_trend(constant, 20), 0.0);
  std::vector<double> line;
  for (int k = 0; k < 30; ++k) line.push_back(2.0 * k + 3.0);
  EXPECT_NEAR(open_trend(line, 20), 2.0, 1e-12);
  EXPECT_THROW(open_trend(std::vector<double>(20, 1.0), 20), InsufficientHistory);

  // Normal-equation oracle on a random window.
  Rng rng(4);
  std::vector<double> w;
  for (int k = 0; k < 25; ++k) w.push_back(rng.uniform(0.0, 50.0));
  Eigen::MatrixXd X(21, 2);
  Eigen::VectorXd y(21);
  for (int k = 0; k < 21; ++k) {
    X(k, 0) = 1.0;
    X(k, 1) = 100.0 + k;  // slope does not depend on the time offset
    y[k] = w[static_cast<std::size_t>(4 + k)];
  }
  const Eigen::VectorXd beta = (X.transpose() * X).ldlt().solve(X.transpose() * y);
  EXPECT_NEAR(open_trend(w, 20), beta[1], 1e-9);
}

TEST(Dynamics, GnnRatio) {
  EXPECT_EQ(gnn_ratio(9.0, 10.0), 0.9);
  EXPECT_EQ(gnn_ratio(10.0, 10.0), 1.0);
  EXPECT_EQ(gnn_ratio(-50.0, -40.0), 1.25);
  EXPECT_THROW(gnn_ratio(1.0, 1e-13), DegenerateIncumbent);
}

/// A run that is easy to make long: GISP with more nodes than the desk
/// preset.
MilpInstance long_run_instance(std::uint64_t seed) {
  auto cfg = preset(Family::Gisp, Scale::Desk, seed);
  cfg.gisp.graph_nodes = 35;
  return generate(cfg);
}

TEST(Dynamics, ForcedSamplingAfterWarmup) {
  const auto inst = long_run_instance(1);
  CollectParams params;
  params.p_sample = 1.0;
  const auto res = collect(inst, -100.0, params);
  ASSERT_GT(res.solve.node_count, 100);
  long first_incumbent_t = res.solve.incumbent_history.front().first;
  const long first_t = std::max(101L, first_incumbent_t);
  ASSERT_EQ(static_cast<long>(res.samples.size()), res.solve.node_count - first_t + 1);
  for (std::size_t k = 0; k < res.samples.size(); ++k) EXPECT_EQ(res.samples[k].t, first_t + static_cast<long>(k));
}

TEST(Dynamics, ShortRunsProduceNoSamples) {
  const auto inst = generate(preset(Family::SetCovering, Scale::Tiny, 1));
  CollectParams params;
  params.p_sample = 1.0;
  const auto res = collect(inst, 10.0, params);
  ASSERT_LE(res.solve.node_count, 100);
  EXPECT_TRUE(res.samples.empty());
}

TEST(Dynamics, NodeLimitCensorsRun) {
  const auto inst = long_run_instance(2);
  BnbParams bnb;
  bnb.node_limit = 20;
  EXPECT_THROW(collect(inst, 1.0, {}, bnb), CensoredRun);
}

TEST(Dynamics, ReplayReproducesSamplesAndLabelsAreMonotone) {
  for (std::uint64_t seed = 3; seed < 6; ++seed) {
    const auto inst = long_run_instance(seed);
    CollectParams params;
    params.p_sample = 0.3;
    params.seed = 17;
    BnbParams bnb;
    bnb.seed = seed;
    const auto live = collect(inst, -120.0, params, bnb);
    const auto replayed = collect_from_log(live.solve.event_log, inst.name, bnb.seed, -120.0, live.solve.z_star,
                                           live.solve.z_lp_root, params);
    EXPECT_EQ(replayed, live.samples);
    for (std::size_t k = 1; k < live.samples.size(); ++k) {
      EXPECT_LE(live.samples[k - 1].label, live.samples[k].label);
      EXPECT_LE(live.samples[k - 1].tree_weight, live.samples[k].tree_weight);
    }
    for (const auto& s : live.samples) {
      EXPECT_GE(s.gap, 0.0);
      EXPECT_LE(s.gap, 1.0);
      EXPECT_GE(s.tree_weight, 0.0);
      EXPECT_LE(s.tree_weight, 1.0);
      // Label against the incumbent trajectory.
      double inc = kInf;
      for (const auto& [t, z] : live.solve.incumbent_history) if (t <= s.t) inc = z;
      EXPECT_EQ(s.incumbent, inc);
      EXPECT_EQ(s.label, std::abs(inc - live.solve.z_star) <= 1e-6 * (1 + std::abs(live.solve.z_star)) ? 1 : 0);
    }
  }
}

TEST(Dynamics, SampleFileRoundTrip) {
  const auto inst = long_run_instance(7);
  CollectParams params;
  params.p_sample = 0.5;
  const auto res = collect(inst, -80.0, params);
  ASSERT_FALSE(res.samples.empty());
  std::string hash;
  const auto text = samples_to_string(res.samples, "cafe");
  EXPECT_EQ(samples_from_string(text, &hash), res.samples);
  EXPECT_EQ(hash, "cafe");
  EXPECT_THROW(samples_from_string("dyn-v0 x\n"), FormatError);
}

}  // namespace
}  // namespace objval
