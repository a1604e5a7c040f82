#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "objval/bnb.hpp"
#include "objval/dynamics.hpp"

namespace objval {

/// Best-estimate rule per step: 1 from the first step at which the
/// incumbent is strictly below the minimum open-node estimate.
std::vector<int> c_est_series(const std::vector<StepRecord>& history);

/// Rank-1 rule per step: 1 from the first step with an empty rank-1 set.
std::vector<int> c_rank1_series(const std::vector<StepRecord>& history);

/// Rule values at the last step of `history`. Precondition: nonempty.
int c_est(const std::vector<StepRecord>& history);
int c_rank1(const std::vector<StepRecord>& history);

/// Same rules on the running quantities stored in a DynamicSample.
int c_est(const DynamicSample& sample);
int c_rank1(const DynamicSample& sample);

/// 1 iff incumbent < prediction + eps * |prediction|.
int c_gnn(double prediction, double incumbent, double eps);

using FeatureVector = std::array<double, kDynamicFeatureCount>;

struct LogisticModel {
  FeatureVector weights{};
  double intercept = 0.0;
  FeatureVector mean{};
  FeatureVector std{1.0, 1.0, 1.0, 1.0, 1.0};
  double threshold = 0.5;
  double lambda = 1e-3;
};

struct LogisticHyperparams {
  double lambda = 1e-3;
  double lr = 0.1;
  int epochs = 500;
  double threshold = 0.5;
};

/// Mean logistic loss over standardized rows plus lambda/2 |w|^2 (the
/// intercept is not penalized). Gradients are written to grad_w / grad_b.
double logistic_loss(const FeatureVector& w, double b, const std::vector<FeatureVector>& x,
                     const std::vector<int>& y, double lambda, FeatureVector& grad_w, double& grad_b);

struct LogisticTrainResult {
  LogisticModel model;
  std::vector<double> loss_curve;
};

/// Full-batch gradient descent from zero weights on standardized features.
/// Throws DegenerateLabels when only one class is present.
LogisticTrainResult train_logistic(const std::vector<DynamicSample>& samples, const LogisticHyperparams& hp);

/// (probability, class) with class = probability > threshold.
std::pair<double, int> c_dyn(const LogisticModel& model, const FeatureVector& features);

std::string logistic_to_string(const LogisticModel& model, const std::string& config_hash = "");
LogisticModel logistic_from_string(const std::string& text);

}  // namespace objval
