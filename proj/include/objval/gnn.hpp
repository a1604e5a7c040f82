#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "objval/graph_features.hpp"

namespace objval {

/// Regression target: the optimum itself, its ratio to the root LP value, or
/// its offset from the root LP value.
enum class TargetKind { Absolute, Ratio, Offset };

const char* to_string(TargetKind kind);
/// Accepts "t1"/"t2"/"t3" and "absolute"/"ratio"/"offset".
TargetKind parse_target_kind(const std::string& text);

/// Parameter blocks. Weights are (out x in), biases (out x 1).
enum GnnBlock {
  kConsW1 = 0, kConsB1, kConsW2, kConsB2,
  kVarW1, kVarB1, kVarW2, kVarB2,
  kMsgConsSelf,   // constraint update, own descriptor
  kMsgConsNbr,    // constraint update, aggregated variables
  kMsgVarSelf,    // variable update, own descriptor
  kMsgVarNbr,     // variable update, aggregated constraints
  kHeadW1, kHeadB1, kHeadW2, kHeadB2,
  kNumGnnBlocks
};

const char* block_name(int block);

using GnnParams = std::array<Eigen::MatrixXd, kNumGnnBlocks>;

struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd std;  ///< entries > 0
};

/// Embeddings, two half-convolutions, per-variable head and mean pooling.
/// forward() returns the standardized target; predict_objective() maps it
/// back to an objective value.
struct GnnModel {
  int hidden = 32;
  TargetKind target = TargetKind::Offset;
  double target_mean = 0.0;
  double target_std = 1.0;
  Standardizer cons_stats;
  Standardizer var_stats;
  GnnParams params;

  /// Random weights (uniform Glorot), zero biases, identity standardization.
  static GnnModel initialized(int hidden, TargetKind target, std::uint64_t seed);
};

/// Throws DimensionMismatch when the feature widths differ from the model.
double forward(const GnnModel& model, const BipartiteGraph& graph);

/// Throws DegenerateLp for ratio targets with |z_lp_root| <= 1e-6.
double predict_objective(const GnnModel& model, const BipartiteGraph& graph);

/// Target value of `z_star` under `kind`; throws DegenerateLp for ratio
/// targets with |z_lp| <= 1e-6.
double make_target(TargetKind kind, double z_star, double z_lp);
double invert_target(TargetKind kind, double value, double z_lp);

struct RegressionSample {
  BipartiteGraph graph;
  double z_lp = 0.0;
  double z_star = 0.0;
  std::string name;
};

/// Mean squared error between forward outputs and `std_targets` (already
/// standardized) over the batch; `grads` receives d loss / d params.
double loss_and_gradients(const GnnModel& model, const std::vector<const BipartiteGraph*>& batch,
                          const std::vector<double>& std_targets, GnnParams& grads);

struct GnnHyperparams {
  int hidden = 32;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  int epochs = 100;
  int batch_size = 16;
  int patience = 15;
  std::uint64_t seed = 0;
  TargetKind target = TargetKind::Offset;
};

struct GnnTrainResult {
  GnnModel model;  ///< parameters of the best validation epoch
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  int best_epoch = 0;
};

/// Adam on standardized targets; statistics come from `train` only. Uses the
/// training loss for model selection when `val` is empty. Throws ConfigError
/// for fewer than 10 training samples and Diverged on a non-finite loss.
GnnTrainResult train_gnn(const std::vector<RegressionSample>& train,
                         const std::vector<RegressionSample>& val, const GnnHyperparams& hp);

std::string gnn_to_string(const GnnModel& model, const std::string& config_hash = "");
GnnModel gnn_from_string(const std::string& text);

}  // namespace objval
