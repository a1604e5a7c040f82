#pragma once

#include <string>
#include <utility>
#include <vector>

#include "objval/classifiers.hpp"
#include "objval/dynamics.hpp"
#include "objval/model.hpp"

namespace objval {

/// 100 * mean |z*_i - pred_i| / |z*_i|. Throws DegenerateTrueValue when
/// some |z*_i| <= 1e-12 and std::invalid_argument on a length mismatch.
double relative_error(const std::vector<double>& preds, const std::vector<double>& trues);

struct ClassificationReport {
  std::string classifier;
  double correct = 0.0;
  double false_positive = 0.0;
  double false_negative = 0.0;
  long count = 0;
};

/// Fractions over aligned label/prediction vectors; all zero for N = 0.
ClassificationReport classification_report(const std::string& classifier, const std::vector<int>& labels,
                                           const std::vector<int>& predictions);

/// 1 when at least half of the training labels are 1.
int majority_class(const std::vector<int>& training_labels);

/// The epsilon grid: 41 points (k - 20) / 1000 for k = 0..40.
std::vector<double> epsilon_grid();

/// Accuracy-maximizing grid epsilon for c_gnn; ties go to smaller |eps|,
/// then smaller eps. Throws std::invalid_argument on an empty set.
double tune_epsilon(const std::vector<DynamicSample>& validation);

/// Positive-prediction rate of c_gnn over the samples at each grid point.
std::vector<double> positive_rate_curve(const std::vector<DynamicSample>& samples);

/// Per-run phase durations as fractions of the processed-node count.
struct RunPhases {
  std::string instance;
  std::uint64_t seed = 0;
  double feasibility = 0.0;  ///< until the first solution
  double improve_far = 0.0;  ///< first solution until within 5% of z*
  double improve_near = 0.0; ///< within 5% until the optimal solution
  double proving = 0.0;      ///< optimal solution until the proof
  double first_branch = 0.0; ///< time of the first branching
  long nodes = 0;
};

/// Throws CensoredRun unless the run proved optimality.
RunPhases run_phases(const SolveResult& result, const std::string& instance, std::uint64_t seed);

struct PhaseBreakdown {
  std::vector<RunPhases> runs;
  RunPhases mean;
  long censored = 0;
};

/// Mean of the per-run fractions.
PhaseBreakdown summarize_phases(std::vector<RunPhases> runs, long censored);

/// |weight| per feature normalized to sum 1, largest first. All zero
/// weights give a uniform split.
std::vector<std::pair<std::string, double>> feature_importance(const LogisticModel& model);

/// Aligned text table; the first row is the header.
std::string format_table(const std::vector<std::vector<std::string>>& rows);
std::string format_csv(const std::vector<std::vector<std::string>>& rows);

std::vector<std::vector<std::string>> report_rows(const std::vector<ClassificationReport>& reports);

}  // namespace objval
