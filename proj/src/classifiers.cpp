#include "objval/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "objval/errors.hpp"
#include "objval/text_io.hpp"

namespace objval {

namespace {

constexpr const char* kLogisticFormat = "logit-v1";

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

FeatureVector standardize(const LogisticModel& m, const FeatureVector& f) {
  FeatureVector out{};
  for (int k = 0; k < kDynamicFeatureCount; ++k) out[k] = (f[k] - m.mean[k]) / m.std[k];
  return out;
}

}  // namespace

std::vector<int> c_est_series(const std::vector<StepRecord>& history) {
  std::vector<int> out;
  double running = kInf;
  for (const auto& rec : history) {
    running = std::min(running, est_margin(rec.incumbent, rec.best_estimate_min));
    out.push_back(running < 0.0 ? 1 : 0);
  }
  return out;
}

std::vector<int> c_rank1_series(const std::vector<StepRecord>& history) {
  std::vector<int> out;
  bool fired = false;
  for (const auto& rec : history) {
    fired = fired || rec.rank1_size == 0;
    out.push_back(fired ? 1 : 0);
  }
  return out;
}

int c_est(const std::vector<StepRecord>& history) {
  if (history.empty()) throw std::invalid_argument("c_est needs a nonempty history");
  return c_est_series(history).back();
}

int c_rank1(const std::vector<StepRecord>& history) {
  if (history.empty()) throw std::invalid_argument("c_rank1 needs a nonempty history");
  return c_rank1_series(history).back();
}

int c_est(const DynamicSample& s) { return s.est_margin_min < 0.0 ? 1 : 0; }
int c_rank1(const DynamicSample& s) { return s.rank1_min == 0 ? 1 : 0; }

int c_gnn(double prediction, double incumbent, double eps) {
  return incumbent < prediction + eps * std::abs(prediction) ? 1 : 0;
}

double logistic_loss(const FeatureVector& w, double b, const std::vector<FeatureVector>& x,
                     const std::vector<int>& y, double lambda, FeatureVector& grad_w, double& grad_b) {
  if (x.empty() || x.size() != y.size()) throw std::invalid_argument("logistic loss needs aligned, nonempty data");
  const double inv = 1.0 / static_cast<double>(x.size());
  double loss = 0.0;
  grad_w.fill(0.0);
  grad_b = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double z = b;
    for (int k = 0; k < kDynamicFeatureCount; ++k) z += w[k] * x[i][k];
    // -y log p - (1 - y) log(1 - p) = softplus(z) - y z
    loss += (softplus(z) - y[i] * z) * inv;
    const double r = (sigmoid(z) - y[i]) * inv;
    for (int k = 0; k < kDynamicFeatureCount; ++k) grad_w[k] += r * x[i][k];
    grad_b += r;
  }
  for (int k = 0; k < kDynamicFeatureCount; ++k) {
    loss += 0.5 * lambda * w[k] * w[k];
    grad_w[k] += lambda * w[k];
  }
  return loss;
}

LogisticTrainResult train_logistic(const std::vector<DynamicSample>& samples, const LogisticHyperparams& hp) {
  long positives = 0;
  for (const auto& s : samples) positives += s.label;
  if (positives == 0 || positives == static_cast<long>(samples.size())) {
    throw DegenerateLabels("logistic training needs both labels, got " + std::to_string(positives) + " positives of " +
                           std::to_string(samples.size()));
  }
  LogisticTrainResult res;
  LogisticModel& m = res.model;
  m.lambda = hp.lambda;
  m.threshold = hp.threshold;
  const double count = static_cast<double>(samples.size());
  FeatureVector sum{}, sq{};
  for (const auto& s : samples) {
    const auto f = s.features();
    for (int k = 0; k < kDynamicFeatureCount; ++k) sum[k] += f[k];
  }
  for (int k = 0; k < kDynamicFeatureCount; ++k) m.mean[k] = sum[k] / count;
  for (const auto& s : samples) {
    const auto f = s.features();
    for (int k = 0; k < kDynamicFeatureCount; ++k) sq[k] += (f[k] - m.mean[k]) * (f[k] - m.mean[k]);
  }
  for (int k = 0; k < kDynamicFeatureCount; ++k) {
    const double sd = std::sqrt(sq[k] / count);
    m.std[k] = sd > 1e-12 ? sd : 1.0;
  }

  std::vector<FeatureVector> x;
  std::vector<int> y;
  for (const auto& s : samples) {
    x.push_back(standardize(m, s.features()));
    y.push_back(s.label);
  }
  FeatureVector gw{};
  double gb = 0.0;
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    res.loss_curve.push_back(logistic_loss(m.weights, m.intercept, x, y, hp.lambda, gw, gb));
    for (int k = 0; k < kDynamicFeatureCount; ++k) m.weights[k] -= hp.lr * gw[k];
    m.intercept -= hp.lr * gb;
  }
  res.loss_curve.push_back(logistic_loss(m.weights, m.intercept, x, y, hp.lambda, gw, gb));
  return res;
}

std::pair<double, int> c_dyn(const LogisticModel& model, const FeatureVector& features) {
  const auto x = standardize(model, features);
  double z = model.intercept;
  for (int k = 0; k < kDynamicFeatureCount; ++k) z += model.weights[k] * x[k];
  const double p = sigmoid(z);
  return {p, p > model.threshold ? 1 : 0};
}

std::string logistic_to_string(const LogisticModel& m, const std::string& config_hash) {
  RecordWriter w(kLogisticFormat, config_hash);
  auto vec = [](const FeatureVector& v) { return std::vector<double>(v.begin(), v.end()); };
  w.put("features", std::string("gap tree_weight median_gap open_trend gnn_ratio"));
  w.put("weights", vec(m.weights));
  w.put("intercept", std::vector<double>{m.intercept});
  w.put("mean", vec(m.mean));
  w.put("std", vec(m.std));
  w.put("threshold", std::vector<double>{m.threshold});
  w.put("lambda", std::vector<double>{m.lambda});
  return w.text();
}

LogisticModel logistic_from_string(const std::string& text) {
  const RecordReader r(text, kLogisticFormat);
  auto vec = [&](const char* key) {
    const auto v = r.doubles(key);
    if (v.size() != kDynamicFeatureCount) throw FormatError(std::string("field ") + key + " needs 5 values");
    FeatureVector out{};
    std::copy(v.begin(), v.end(), out.begin());
    return out;
  };
  auto scalar = [&](const char* key) {
    const auto v = r.doubles(key);
    if (v.size() != 1) throw FormatError(std::string("field ") + key + " needs 1 value");
    return v[0];
  };
  LogisticModel m;
  m.weights = vec("weights");
  m.intercept = scalar("intercept");
  m.mean = vec("mean");
  m.std = vec("std");
  for (const double s : m.std) {
    if (!(s > 0.0)) throw FormatError("standardization std must be positive");
  }
  m.threshold = scalar("threshold");
  m.lambda = scalar("lambda");
  return m;
}

}  // namespace objval
