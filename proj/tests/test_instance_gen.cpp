#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "objval/bnb.hpp"
#include "objval/errors.hpp"
#include "objval/instance_gen.hpp"
#include "oracles.hpp"

namespace objval {
namespace {

const Family kFamilies[] = {Family::SetCovering, Family::CombAuction, Family::Gisp};

TEST(InstanceGen, DeterministicAndValid) {
  for (const Family f : kFamilies) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto cfg = preset(f, Scale::Desk, seed);
      const auto a = generate(cfg);
      EXPECT_TRUE(validate(a).empty()) << family_tag(f) << " seed " << seed;
      if (seed < 5) EXPECT_EQ(instance_to_string(a), instance_to_string(generate(cfg)));
    }
  }
}

TEST(InstanceGen, SetCoveringStructure) {
  const auto inst = gen_set_covering(100, 200, 0.05, 9);
  EXPECT_EQ(inst.num_vars, 200);
  EXPECT_EQ(inst.num_cons, 100);
  EXPECT_FALSE(inst.maximize_origin);
  std::vector<int> col_rows(200, 0);
  for (int i = 0; i < 100; ++i) {
    EXPECT_GE(inst.rows[static_cast<std::size_t>(i)].size(), 2u);
    EXPECT_EQ(inst.rhs[static_cast<std::size_t>(i)], 1.0);
    for (const auto& e : inst.rows[static_cast<std::size_t>(i)]) {
      EXPECT_EQ(e.coef, 1.0);
      ++col_rows[static_cast<std::size_t>(e.idx)];
    }
  }
  for (int j = 0; j < 200; ++j) {
    EXPECT_GE(col_rows[static_cast<std::size_t>(j)], 1);
    const double c = inst.obj[static_cast<std::size_t>(j)];
    EXPECT_TRUE(c >= 1 && c <= 100 && c == std::floor(c));
  }
  std::vector<double> ones(200, 1.0);
  EXPECT_TRUE(is_feasible(inst, ones));
  EXPECT_THROW(gen_set_covering(10, 1, 0.5, 0), ConfigError);
  EXPECT_THROW(gen_set_covering(10, 10, 1.5, 0), ConfigError);
}

TEST(InstanceGen, PackingFamiliesAdmitZero) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (const auto& inst : {generate(preset(Family::CombAuction, Scale::Desk, seed)),
                             generate(preset(Family::Gisp, Scale::Desk, seed))}) {
      EXPECT_TRUE(inst.maximize_origin);
      EXPECT_TRUE(is_feasible(inst, std::vector<double>(static_cast<std::size_t>(inst.num_vars), 0.0)));
    }
  }
}

TEST(InstanceGen, FullScaleDimensions) {
  const auto sc = generate(preset(Family::SetCovering, Scale::Full, 1));
  EXPECT_EQ(sc.num_vars, 1000);
  EXPECT_EQ(sc.num_cons, 750);
  const auto ca = generate(preset(Family::CombAuction, Scale::Full, 1));
  EXPECT_EQ(ca.num_vars, 1000);
  EXPECT_EQ(ca.num_cons, 200);
  const auto gi = generate(preset(Family::Gisp, Scale::Full, 1));
  const int removable = gi.num_vars - 80;
  EXPECT_GE(removable, 0);
  // 80 choose 2 = 3160 possible edges at p = 0.6.
  EXPECT_NEAR(gi.num_cons, 0.6 * 3160, 3 * std::sqrt(3160 * 0.6 * 0.4));
}

TEST(InstanceGen, RemovableEdgeShareMatchesAlpha) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto inst = gen_gisp(58, 0.6, 0.75, seed);
    const double edges = inst.num_cons;
    ASSERT_GT(edges, 900);
    const double removable = inst.num_vars - 58;
    EXPECT_NEAR(removable, 0.75 * edges, 3 * std::sqrt(edges * 0.75 * 0.25));
  }
}

TEST(InstanceGen, TinySpecExamplesMatchBruteForce) {
  const MilpInstance cases[] = {gen_set_covering(2, 2, 0.9, 3), gen_comb_auction(3, 4, 3), gen_gisp(4, 0.99, 0.5, 3)};
  for (const auto& inst : cases) {
    ASSERT_LE(inst.num_vars, 14);
    const auto brute = oracle::enumerate_binary(inst);
    ASSERT_TRUE(brute.feasible);
    EXPECT_NEAR(solve(inst).z_star, brute.objective, 1e-9) << inst.name;
  }
  // Both columns cover both rows: the optimum is the cheaper column.
  const auto sc = gen_set_covering(2, 2, 0.9, 3);
  EXPECT_EQ(oracle::enumerate_binary(sc).objective, std::min(sc.obj[0], sc.obj[1]));
}

TEST(InstanceGen, Mixed) {
  std::vector<GenConfig> cfgs;
  for (const Family f : kFamilies) cfgs.push_back(preset(f, Scale::Tiny, 4));
  const auto a = gen_mixed(6, cfgs, 11);
  std::map<Family, int> counts;
  for (const auto& g : a) ++counts[g.family];
  EXPECT_EQ(counts, (std::map<Family, int>{{Family::SetCovering, 2}, {Family::CombAuction, 2}, {Family::Gisp, 2}}));
  const auto b = gen_mixed(6, cfgs, 11);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].family, b[k].family);
    EXPECT_EQ(a[k].instance, b[k].instance);
  }
  EXPECT_THROW(gen_mixed(7, cfgs, 0), ConfigError);
}

TEST(InstanceGen, ConfigChecks) {
  auto cfg = preset(Family::Gisp, Scale::Desk, 0);
  cfg.gisp.alpha = 1.0;
  EXPECT_THROW(check(cfg), ConfigError);
  cfg = preset(Family::CombAuction, Scale::Desk, 0);
  cfg.auction.bids = 0;
  EXPECT_THROW(check(cfg), ConfigError);
  EXPECT_EQ(parse_family("gisp"), Family::Gisp);
  EXPECT_THROW(parse_family("knapsack"), ConfigError);
}

}  // namespace
}  // namespace objval
