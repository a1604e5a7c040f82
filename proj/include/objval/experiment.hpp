#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "objval/bnb.hpp"
#include "objval/classifiers.hpp"
#include "objval/dynamics.hpp"
#include "objval/evaluation.hpp"
#include "objval/gnn.hpp"
#include "objval/instance_gen.hpp"

namespace objval {

/// OBJVAL_WORKERS if set to a positive integer, else the hardware
/// concurrency (at least 1).
int worker_count();

/// Calls fn(i) for every i in [0, count) on up to `workers` threads. The
/// first exception (lowest index) is rethrown after all threads finish.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn);

/// One branch-and-bound run of a named instance under a permutation seed.
struct SolvedRun {
  std::string instance;
  std::uint64_t seed = 0;
  SolveResult result;
};

/// solve-v1: run summary without the event log (stored separately as
/// events-v1).
std::string solved_run_to_string(const SolvedRun& run, const std::string& config_hash = "");
SolvedRun solved_run_from_string(const std::string& text, std::string* config_hash = nullptr);

enum class Split { Train, Val, Test };

const char* to_string(Split split);

/// Contiguous split of `count` ordered items: train first, then val, then
/// test, with round(count * frac) items in val and test.
std::vector<Split> assign_splits(std::size_t count, double val_frac, double test_frac);

/// Root graph of `instance` labeled with the optimum of `run`.
RegressionSample regression_sample(const MilpInstance& instance, const SolveResult& run);

/// Relative error of the model over `samples` and of predicting the root LP
/// value itself.
double gnn_error(const GnnModel& model, const std::vector<RegressionSample>& samples);
double lp_baseline_error(const std::vector<RegressionSample>& samples);

/// Reports on `test` for the majority rule (majority of `train`), the
/// best-estimate rule, the rank-1 rule, the GNN rule at eps = 0 and at the
/// eps tuned on `val`, and the logistic model trained on `train`.
struct DynamicEvaluation {
  std::vector<ClassificationReport> reports;
  LogisticModel model;
  double eps = 0.0;
};

DynamicEvaluation evaluate_dynamic(const std::vector<DynamicSample>& train, const std::vector<DynamicSample>& val,
                                   const std::vector<DynamicSample>& test, const LogisticModel& model);

}  // namespace objval
