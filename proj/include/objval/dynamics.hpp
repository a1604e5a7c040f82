#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "objval/bnb.hpp"
#include "objval/rng.hpp"

namespace objval {

inline constexpr double kGapEpsilon = 1e-9;
inline constexpr int kDynamicFeatureCount = 5;

/// Normalized incumbent/bound distance. 1 without an incumbent (+inf), with
/// an unbounded lower bound, or when the two bounds differ in sign. A lower
/// bound of +inf (no open nodes) is read as the incumbent itself.
double gap(double incumbent, double lower_bound);

/// Sum of 2^-depth over the given leaf depths.
double tree_weight(const std::vector<int>& leaf_depths);

/// |incumbent - median open bound| / |first incumbent - root LP value|.
/// 0 when the open set is empty or the denominator is <= 1e-9.
double median_gap(double incumbent, std::optional<double> median_open_bound, double first_incumbent,
                  double z_lp_root);

/// Least-squares slope of the last h + 1 values against consecutive
/// integers. Throws InsufficientHistory when fewer than h + 1 are given.
double open_trend(const std::vector<double>& values, int h);

/// prediction / incumbent. Throws DegenerateIncumbent when |incumbent| <= 1e-12.
double gnn_ratio(double prediction, double incumbent);

/// True when `incumbent` is within 1e-6 (1 + |z*|) of z*.
bool is_optimal_label(double incumbent, double z_star);

/// One observation of a running solve plus the information needed to label
/// it and to evaluate the baseline classifiers on it.
struct DynamicSample {
  std::string instance;
  std::uint64_t seed = 0;
  long t = 0;
  double gap = 1.0;
  double tree_weight = 0.0;
  double median_gap = 0.0;
  double open_trend = 0.0;
  double gnn_ratio = 0.0;
  double incumbent = kInf;
  double z_star = 0.0;
  double z_lp = 0.0;
  int label = 0;
  double gnn_prediction = 0.0;
  /// min over s <= t of (incumbent - min open estimate); < 0 fires the
  /// best-estimate rule.
  double est_margin_min = kInf;
  /// min over s <= t of the rank-1 set size; 0 fires the rank-1 rule.
  long rank1_min = 0;

  std::array<double, kDynamicFeatureCount> features() const {
    return {gap, tree_weight, median_gap, open_trend, gnn_ratio};
  }

  friend bool operator==(const DynamicSample&, const DynamicSample&) = default;
};

inline constexpr std::array<const char*, kDynamicFeatureCount> kDynamicFeatureNames = {
    "gap", "tree_weight", "median_gap", "open_trend", "gnn_ratio"};

struct CollectParams {
  long warmup = 100;
  double p_sample = 0.02;
  int trend_window = 20;
  std::uint64_t seed = 0;
};

/// Observer that samples dynamic features during a solve. Sampling is
/// restricted to steps t > warmup with an incumbent; each such step is kept
/// with probability p_sample. Samples stay unlabeled until finish().
class Collector : public TreeObserver {
 public:
  Collector(std::string instance, std::uint64_t solve_seed, double gnn_prediction, const CollectParams& params);

  void on_step(const TreeTracker& tracker) override;

  /// Labels the samples against z*. Runs that ended within the warmup
  /// window produce none.
  std::vector<DynamicSample> finish(double z_star, double z_lp_root) const;

  long discarded() const { return discarded_; }

 private:
  std::string instance_;
  std::uint64_t solve_seed_;
  double prediction_;
  CollectParams params_;
  Rng rng_;
  std::vector<double> open_counts_;
  double est_margin_min_ = kInf;
  long rank1_min_ = -1;
  long discarded_ = 0;
  std::vector<DynamicSample> samples_;
};

/// (incumbent - min open estimate), with +inf without an incumbent and -inf
/// when the open set is empty.
double est_margin(double incumbent, double best_estimate_min);

struct CollectResult {
  std::vector<DynamicSample> samples;
  SolveResult solve;
  long discarded = 0;
};

/// Solves `instance` with a Collector attached. Throws CensoredRun when the
/// node limit stops the solve before optimality is proved.
CollectResult collect(const MilpInstance& instance, double gnn_prediction, const CollectParams& params,
                      const BnbParams& bnb = {});

/// Same samples as collect() from a recorded event log of that solve.
std::vector<DynamicSample> collect_from_log(const std::vector<TreeEvent>& events, const std::string& instance,
                                            std::uint64_t solve_seed, double gnn_prediction, double z_star,
                                            double z_lp_root, const CollectParams& params);

/// dyn-v1: header line, then one whitespace separated record per sample.
std::string samples_to_string(const std::vector<DynamicSample>& samples, const std::string& config_hash = "");
std::vector<DynamicSample> samples_from_string(const std::string& text, std::string* config_hash = nullptr);

}  // namespace objval
