#include "objval/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "objval/errors.hpp"
#include "objval/text_io.hpp"

namespace objval {

double relative_error(const std::vector<double>& preds, const std::vector<double>& trues) {
  if (preds.size() != trues.size()) throw std::invalid_argument("prediction and truth lengths differ");
  if (trues.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < trues.size(); ++i) {
    if (std::abs(trues[i]) <= 1e-12) throw DegenerateTrueValue("relative error undefined for z* = 0");
    sum += std::abs(trues[i] - preds[i]) / std::abs(trues[i]);
  }
  return 100.0 * sum / static_cast<double>(trues.size());
}

ClassificationReport classification_report(const std::string& classifier, const std::vector<int>& labels,
                                           const std::vector<int>& predictions) {
  if (labels.size() != predictions.size()) throw std::invalid_argument("labels and predictions differ in length");
  ClassificationReport r;
  r.classifier = classifier;
  r.count = static_cast<long>(labels.size());
  if (labels.empty()) return r;
  long correct = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == predictions[i]) ++correct;
    else if (predictions[i] == 1) ++fp;
    else ++fn;
  }
  const double n = static_cast<double>(labels.size());
  r.correct = static_cast<double>(correct) / n;
  r.false_positive = static_cast<double>(fp) / n;
  r.false_negative = static_cast<double>(fn) / n;
  return r;
}

int majority_class(const std::vector<int>& training_labels) {
  long positives = 0;
  for (const int y : training_labels) positives += y;
  return 2 * positives >= static_cast<long>(training_labels.size()) ? 1 : 0;
}

std::vector<double> epsilon_grid() {
  std::vector<double> grid;
  for (int k = 0; k <= 40; ++k) grid.push_back(static_cast<double>(k - 20) / 1000.0);
  return grid;
}

double tune_epsilon(const std::vector<DynamicSample>& validation) {
  if (validation.empty()) throw std::invalid_argument("epsilon tuning needs validation samples");
  double best_eps = 0.0;
  long best_correct = -1;
  for (const double eps : epsilon_grid()) {
    long correct = 0;
    for (const auto& s : validation) correct += c_gnn(s.gnn_prediction, s.incumbent, eps) == s.label ? 1 : 0;
    const bool better = correct > best_correct ||
                        (correct == best_correct && (std::abs(eps) < std::abs(best_eps) ||
                                                     (std::abs(eps) == std::abs(best_eps) && eps < best_eps)));
    if (better) {
      best_correct = correct;
      best_eps = eps;
    }
  }
  return best_eps;
}

std::vector<double> positive_rate_curve(const std::vector<DynamicSample>& samples) {
  std::vector<double> out;
  for (const double eps : epsilon_grid()) {
    long pos = 0;
    for (const auto& s : samples) pos += c_gnn(s.gnn_prediction, s.incumbent, eps);
    out.push_back(samples.empty() ? 0.0 : static_cast<double>(pos) / static_cast<double>(samples.size()));
  }
  return out;
}

RunPhases run_phases(const SolveResult& result, const std::string& instance, std::uint64_t seed) {
  if (result.proof != ProofStatus::OptimalityProved || !result.has_solution) {
    throw CensoredRun("run of " + instance + " did not prove optimality");
  }
  const double z_star = result.z_star;
  const double total = static_cast<double>(result.node_count);
  // Events at step t happen at time t - 1 on a [0, node_count] axis.
  auto at = [&](long t) { return static_cast<double>(t - 1); };
  double first = total, near = total, optimal = total;
  bool seen_first = false, seen_near = false, seen_opt = false;
  for (const auto& [t, z] : result.incumbent_history) {
    if (!seen_first) {
      first = at(t);
      seen_first = true;
    }
    if (!seen_near && std::abs(z - z_star) <= 0.05 * std::abs(z_star)) {
      near = at(t);
      seen_near = true;
    }
    if (!seen_opt && is_optimal_label(z, z_star)) {
      optimal = at(t);
      seen_opt = true;
    }
  }
  near = std::max(near, first);
  optimal = std::max(optimal, near);
  near = std::min(near, optimal);
  double branch = total;
  for (const auto& e : result.event_log) {
    if (e.kind == EventKind::Branched) {
      branch = at(e.t);
      break;
    }
  }
  RunPhases r;
  r.instance = instance;
  r.seed = seed;
  r.nodes = result.node_count;
  r.feasibility = first / total;
  r.improve_far = (near - first) / total;
  r.improve_near = (optimal - near) / total;
  r.proving = (total - optimal) / total;
  r.first_branch = branch / total;
  return r;
}

PhaseBreakdown summarize_phases(std::vector<RunPhases> runs, long censored) {
  PhaseBreakdown b;
  b.censored = censored;
  b.runs = std::move(runs);
  if (b.runs.empty()) return b;
  const double n = static_cast<double>(b.runs.size());
  for (const auto& r : b.runs) {
    b.mean.feasibility += r.feasibility / n;
    b.mean.improve_far += r.improve_far / n;
    b.mean.improve_near += r.improve_near / n;
    b.mean.proving += r.proving / n;
    b.mean.first_branch += r.first_branch / n;
    b.mean.nodes += r.nodes;
  }
  b.mean.nodes = static_cast<long>(std::llround(static_cast<double>(b.mean.nodes) / n));
  return b;
}

std::vector<std::pair<std::string, double>> feature_importance(const LogisticModel& model) {
  double total = 0.0;
  for (const double w : model.weights) total += std::abs(w);
  std::vector<std::pair<std::string, double>> out;
  for (int k = 0; k < kDynamicFeatureCount; ++k) {
    const double share = total > 0.0 ? std::abs(model.weights[k]) / total : 1.0 / kDynamicFeatureCount;
    out.emplace_back(kDynamicFeatureNames[k], share);
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

std::string format_table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    if (width.size() < row.size()) width.resize(row.size(), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      const auto& cell = rows[r][c];
      if (c > 0) out += "  ";
      // First column left aligned, the rest right aligned.
      if (c == 0) out += cell + std::string(width[c] - cell.size(), ' ');
      else out += std::string(width[c] - cell.size(), ' ') + cell;
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += "\n";
    if (r == 0) {
      std::size_t line = 0;
      for (std::size_t c = 0; c < width.size(); ++c) line += width[c] + (c > 0 ? 2 : 0);
      out += std::string(line, '-') + "\n";
    }
  }
  return out;
}

std::string format_csv(const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) out += ",";
      out += row[c];
    }
    out += "\n";
  }
  return out;
}

std::vector<std::vector<std::string>> report_rows(const std::vector<ClassificationReport>& reports) {
  auto fixed = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return std::string(buf);
  };
  std::vector<std::vector<std::string>> rows{{"classifier", "correct", "fp", "fn", "n"}};
  for (const auto& r : reports) {
    rows.push_back({r.classifier, fixed(r.correct), fixed(r.false_positive), fixed(r.false_negative),
                    std::to_string(r.count)});
  }
  return rows;
}

}  // namespace objval
