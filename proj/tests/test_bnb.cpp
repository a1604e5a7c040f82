#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "objval/bnb.hpp"
#include "objval/errors.hpp"
#include "objval/instance_gen.hpp"
#include "oracles.hpp"

namespace objval {
namespace {

/// Checks tree invariants at every step against a known optimum.
class InvariantObserver : public TreeObserver {
 public:
  explicit InvariantObserver(double z_star) : z_star_(z_star) {}

  void on_event(const TreeEvent& e) override {
    EXPECT_GE(e.t, last_t_);
    if (e.t != last_t_) incumbents_this_t_ = 0;
    last_t_ = e.t;
    if (e.kind == EventKind::NewIncumbent) EXPECT_LE(++incumbents_this_t_, 1);
  }

  void on_step(const TreeTracker& tr) override {
    EXPECT_EQ(tr.t(), ++steps_);
    EXPECT_EQ(tr.inner_count() + tr.leaf_count() + tr.open_count(), tr.created_count());
    if (tr.has_incumbent()) {
      EXPECT_LE(std::min(tr.lower_bound(), tr.incumbent()) - 1e-6, z_star_ + 1e-9 * (1 + std::abs(z_star_)));
      EXPECT_GE(tr.incumbent(), z_star_ - 1e-9);
      EXPECT_LE(tr.incumbent(), last_incumbent_);
      last_incumbent_ = tr.incumbent();
    }
    EXPECT_GE(tr.tree_weight(), last_weight_);
    last_weight_ = tr.tree_weight();
  }

 private:
  double z_star_;
  long last_t_ = 0;
  long steps_ = 0;
  int incumbents_this_t_ = 0;
  double last_incumbent_ = kInf;
  double last_weight_ = 0.0;
};

TEST(Bnb, BranchPicksMostFractionalLowestIndex) {
  const std::vector<char> mask{1, 1};
  EXPECT_EQ(select_branching_variable({0.5, 0.9}, mask), 0);
  EXPECT_EQ(select_branching_variable({0.5, 0.5}, mask), 0);
  EXPECT_EQ(select_branching_variable({0.1, 0.4}, mask), 1);
  EXPECT_THROW(select_branching_variable({1.0, 0.0}, mask), NoFractionalVariable);
  EXPECT_THROW(select_branching_variable({0.5, 0.5}, {0, 0}), NoFractionalVariable);
}

TEST(Bnb, NodeEstimate) {
  MilpInstance inst = make_instance("e", 1);
  inst.obj[0] = 3.0;
  auto pc = Pseudocosts::for_instance(inst);
  EXPECT_DOUBLE_EQ(node_estimate(7.0, {}, pc), 7.0);
  update_pseudocosts(pc, 0, BranchDirection::Down, 4.0, 1.0);
  update_pseudocosts(pc, 0, BranchDirection::Up, 8.0, 1.0);
  EXPECT_DOUBLE_EQ(node_estimate(10.0, {{0, 0.25}}, pc), 11.0);
}

TEST(Bnb, NodeEstimateFallsBackToObjectiveMagnitude) {
  MilpInstance inst = make_instance("e", 3);
  inst.obj = {2.0, -6.0, 0.5};
  const auto pc = Pseudocosts::for_instance(inst);
  // Hand computation: min(2*0.3, 2*0.7) + min(6*0.5, 6*0.5) + min(0.5*0.9, 0.5*0.1)
  //                 = 0.6 + 3.0 + 0.05
  EXPECT_NEAR(node_estimate(1.0, {{0, 0.3}, {1, 0.5}, {2, 0.9}}, pc), 1.0 + 0.6 + 3.0 + 0.05, 1e-12);
}

TEST(Bnb, PseudocostRunningMean) {
  MilpInstance inst = make_instance("p", 1);
  auto pc = Pseudocosts::for_instance(inst);
  update_pseudocosts(pc, 0, BranchDirection::Up, 2.0, 1.0);
  EXPECT_DOUBLE_EQ(pc.up_cost(0), 2.0);
  EXPECT_EQ(pc.up_count[0], 1);
  update_pseudocosts(pc, 0, BranchDirection::Up, 4.0, 1.0);
  EXPECT_DOUBLE_EQ(pc.up_cost(0), 3.0);
  update_pseudocosts(pc, 0, BranchDirection::Up, 0.0, 0.5);
  EXPECT_DOUBLE_EQ(pc.up_cost(0), 2.0);
  update_pseudocosts(pc, 0, BranchDirection::Up, -1e-12, 0.5);
  EXPECT_GE(pc.up_cost(0), 0.0);
  EXPECT_THROW(update_pseudocosts(pc, 0, BranchDirection::Up, 1.0, 0.0), std::invalid_argument);
}

TEST(Bnb, OpenQueueSelection) {
  OpenQueue q;
  q.push(1, 5.0, 1);
  q.push(2, 3.0, 1);
  q.push(3, 7.0, 1);
  EXPECT_EQ(q.select(), 2);
  OpenQueue tie;
  tie.push(4, 3.0, 2);
  tie.push(5, 3.0, 5);
  tie.push(6, 3.0, 5);
  EXPECT_EQ(tie.select(), 5);
  EXPECT_THROW(OpenQueue{}.select(), std::logic_error);
  auto removed = q.take_at_or_above(5.0);
  EXPECT_EQ(removed, (std::vector<int>{3, 1}));
  EXPECT_EQ(q.size(), 1u);
}

TEST(Bnb, RoundingHeuristic) {
  MilpInstance cover = make_instance("cover", 2);
  make_binary(cover, 0);
  make_binary(cover, 1);
  cover.obj = {1.0, 1.0};
  cover.add_ge_row({{0, 1.0}, {1, 1.0}}, 1.0);
  cover.add_ge_row({{1, 1.0}}, 0.4);  // needs x1 = 1 when integral

  LpSolution integral;
  integral.status = LpStatus::Optimal;
  integral.x = {0.0, 1.0};
  EXPECT_EQ(rounding_heuristic(integral, cover), integral.x);

  LpSolution frac = integral;
  frac.x = {0.6, 0.4};
  EXPECT_FALSE(rounding_heuristic(frac, cover).has_value());
  // Independent check that the nearest rounding really is infeasible.
  EXPECT_FALSE(is_feasible(cover, {1.0, 0.0}));

  MilpInstance pack = make_instance("pack", 2);
  make_binary(pack, 0);
  make_binary(pack, 1);
  pack.obj = {-1.0, -1.0};
  pack.add_le_row({{0, 1.0}, {1, 1.0}}, 1.0);
  frac.x = {0.5, 0.5};
  const auto x = rounding_heuristic(frac, pack);
  ASSERT_TRUE(x.has_value());
  EXPECT_TRUE(is_feasible(pack, *x));
}

TEST(Bnb, IntegralRootSolvesWithoutBranching) {
  MilpInstance inst = make_instance("root", 2);
  make_binary(inst, 0);
  make_binary(inst, 1);
  inst.obj = {3.0, 1.0};
  inst.add_ge_row({{0, 1.0}, {1, 1.0}}, 1.0);
  const auto res = solve(inst);
  EXPECT_EQ(res.proof, ProofStatus::OptimalityProved);
  EXPECT_EQ(res.node_count, 1);
  EXPECT_DOUBLE_EQ(res.z_star, 1.0);
  TreeTracker tr;
  for (const auto& e : res.event_log) tr.apply(e);
  EXPECT_DOUBLE_EQ(tr.tree_weight(), 1.0);
}

TEST(Bnb, InfeasibleInstanceThrows) {
  MilpInstance inst = make_instance("inf", 1);
  make_binary(inst, 0);
  inst.add_ge_row({{0, 2.0}}, 1.0);
  inst.add_ge_row({{0, -2.0}}, -1.5);
  EXPECT_THROW(solve(inst), InfeasibleInstance);
}

TEST(Bnb, NodeLimitReturnsBestIncumbent) {
  const auto inst = generate(preset(Family::Gisp, Scale::Desk, 5));
  BnbParams params;
  params.node_limit = 5;
  const auto res = solve(inst, params);
  EXPECT_EQ(res.proof, ProofStatus::NodeLimit);
  EXPECT_EQ(res.node_count, 5);
  if (res.has_solution) EXPECT_TRUE(is_feasible(inst, res.x_star));
}

class TinyFamily : public ::testing::TestWithParam<Family> {};

TEST_P(TinyFamily, MatchesBruteForceAndKeepsInvariants) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto inst = generate(preset(GetParam(), Scale::Tiny, seed));
    ASSERT_LE(inst.num_vars, 14);
    const auto ref = oracle::enumerate_binary(inst);
    ASSERT_TRUE(ref.feasible);
    InvariantObserver obs(ref.objective);
    const auto res = solve(inst, {}, &obs);
    ASSERT_EQ(res.proof, ProofStatus::OptimalityProved);
    EXPECT_EQ(res.z_star, ref.objective) << inst.name;
    EXPECT_TRUE(is_feasible(inst, res.x_star));
    for (std::size_t k = 1; k < res.incumbent_history.size(); ++k) {
      EXPECT_LT(res.incumbent_history[k].second, res.incumbent_history[k - 1].second);
    }
    TreeTracker tr;
    for (const auto& e : res.event_log) tr.apply(e);
    EXPECT_NEAR(tr.tree_weight(), 1.0, 1e-9);
    EXPECT_EQ(tr.open_count(), 0);

    BnbParams permuted;
    permuted.seed = seed;
    EXPECT_EQ(solve(inst, permuted).z_star, ref.objective);
  }
}

INSTANTIATE_TEST_SUITE_P(Families, TinyFamily,
                         ::testing::Values(Family::SetCovering, Family::CombAuction, Family::Gisp));

class HistoryRecorder : public TreeObserver {
 public:
  void on_step(const TreeTracker& tr) override { records.push_back(tr.history().back()); }
  std::vector<StepRecord> records;
};

bool same(const StepRecord& a, const StepRecord& b) {
  auto eq = [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); };
  return a.t == b.t && eq(a.incumbent, b.incumbent) && eq(a.best_estimate_min, b.best_estimate_min) &&
         a.rank1_size == b.rank1_size && a.open_count == b.open_count && eq(a.lower_bound, b.lower_bound) &&
         eq(a.tree_weight, b.tree_weight);
}

TEST(Bnb, DeterministicAndReplayable) {
  const auto inst = generate(preset(Family::CombAuction, Scale::Desk, 9));
  HistoryRecorder live;
  const auto a = solve(inst, {}, &live);
  const auto b = solve(inst);
  EXPECT_EQ(a.event_log, b.event_log);
  ASSERT_EQ(a.proof, ProofStatus::OptimalityProved);

  std::stringstream ss;
  write_event_log(ss, a.event_log);
  const auto parsed = read_event_log(ss);
  EXPECT_EQ(parsed, a.event_log);

  HistoryRecorder replayed;
  replay(parsed, replayed);
  ASSERT_EQ(replayed.records.size(), live.records.size());
  for (std::size_t k = 0; k < live.records.size(); ++k) {
    EXPECT_TRUE(same(live.records[k], replayed.records[k])) << "step " << k;
  }
  EXPECT_NEAR(live.records.back().tree_weight, 1.0, 1e-9);
}

TEST(Bnb, TrackerRank1AndMedian) {
  TreeTracker tr;
  EXPECT_EQ(tr.rank1_size(), 1);  // root at a depth with nothing processed
  tr.apply({.t = 1, .kind = EventKind::NodeProcessed, .node = 0, .depth = 0, .z = 2.0});
  tr.apply({.t = 1, .kind = EventKind::Branched, .node = 0, .depth = 0, .z = 2.0, .est_down = 3.0, .est_up = 4.0, .aux = 1});
  tr.end_step();
  EXPECT_EQ(tr.rank1_size(), 2);
  EXPECT_DOUBLE_EQ(tr.best_estimate_min(), 3.0);
  EXPECT_DOUBLE_EQ(*tr.median_open_bound(), 2.0);
  tr.apply({.t = 2, .kind = EventKind::NodeProcessed, .node = 1, .depth = 1, .z = 2.5});
  tr.apply({.t = 2, .kind = EventKind::Branched, .node = 1, .depth = 1, .z = 2.5, .est_down = 5.0, .est_up = 2.9, .aux = 3});
  tr.end_step();
  // Depth 1 processed estimate is 3; node 2 (est 4) no longer qualifies.
  // Depth 2 has nothing processed, so nodes 3 and 4 qualify.
  EXPECT_EQ(tr.rank1_size(), 2);
  EXPECT_DOUBLE_EQ(*tr.median_open_bound(), 2.5);
  EXPECT_EQ(tr.history().size(), 2u);
}

}  // namespace
}  // namespace objval
