#include "objval/experiment.hpp"

#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "objval/errors.hpp"
#include "objval/graph_features.hpp"
#include "objval/simplex.hpp"
#include "objval/text_io.hpp"

namespace objval {

int worker_count() {
  if (const char* env = std::getenv("OBJVAL_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn) {
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, workers)), count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::mutex mu;
  std::size_t next = 0;
  std::size_t failed_at = count;
  std::exception_ptr failure;
  auto work = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard lock(mu);
        if (next >= count) return;
        i = next++;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < failed_at) {
          failed_at = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

namespace {

ProofStatus parse_proof(const std::string& text) {
  for (const auto p : {ProofStatus::OptimalityProved, ProofStatus::NodeLimit, ProofStatus::TimeLimit}) {
    if (text == to_string(p)) return p;
  }
  throw FormatError("unknown proof status '" + text + "'");
}

}  // namespace

std::string solved_run_to_string(const SolvedRun& run, const std::string& config_hash) {
  const SolveResult& r = run.result;
  RecordWriter w("solve-v1", config_hash);
  w.put("instance", run.instance);
  w.put("seed", std::to_string(run.seed));
  w.put("proof", to_string(r.proof));
  w.put("has_solution", static_cast<long>(r.has_solution));
  w.put("z_star", std::vector<double>{r.z_star});
  w.put("z_lp_root", std::vector<double>{r.z_lp_root});
  w.put("node_count", r.node_count);
  std::vector<double> ts, zs;
  for (const auto& [t, z] : r.incumbent_history) {
    ts.push_back(static_cast<double>(t));
    zs.push_back(z);
  }
  w.put("incumbent_t", ts);
  w.put("incumbent_z", zs);
  w.put("x_star", r.x_star);
  return w.text();
}

SolvedRun solved_run_from_string(const std::string& text, std::string* config_hash) {
  RecordReader rd(text, "solve-v1");
  if (config_hash) *config_hash = rd.config_hash();
  SolvedRun run;
  run.instance = rd.token("instance");
  run.seed = std::stoull(rd.token("seed"));
  SolveResult& r = run.result;
  r.proof = parse_proof(rd.token("proof"));
  r.has_solution = rd.integer("has_solution") != 0;
  r.z_star = rd.doubles("z_star").at(0);
  r.z_lp_root = rd.doubles("z_lp_root").at(0);
  r.node_count = rd.integer("node_count");
  const auto ts = rd.doubles("incumbent_t");
  const auto zs = rd.doubles("incumbent_z");
  if (ts.size() != zs.size()) throw FormatError("incumbent_t and incumbent_z differ in length");
  for (std::size_t k = 0; k < ts.size(); ++k) r.incumbent_history.emplace_back(static_cast<long>(ts[k]), zs[k]);
  r.x_star = rd.doubles("x_star");
  return run;
}

const char* to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

std::vector<Split> assign_splits(std::size_t count, double val_frac, double test_frac) {
  if (val_frac < 0 || test_frac < 0 || val_frac + test_frac >= 1) {
    throw ConfigError("split fractions must be >= 0 and sum to < 1");
  }
  const auto n = static_cast<double>(count);
  const auto n_val = static_cast<std::size_t>(std::llround(n * val_frac));
  const auto n_test = static_cast<std::size_t>(std::llround(n * test_frac));
  std::vector<Split> out(count, Split::Train);
  const std::size_t n_train = count - std::min(count, n_val + n_test);
  for (std::size_t k = n_train; k < count; ++k) out[k] = k < n_train + n_val ? Split::Val : Split::Test;
  return out;
}

RegressionSample regression_sample(const MilpInstance& instance, const SolveResult& run) {
  if (!run.has_solution) throw InfeasibleInstance(instance.name + " has no solution to learn from");
  RegressionSample s;
  s.graph = extract(instance, solve_lp(instance));
  s.z_lp = s.graph.z_lp_root;
  s.z_star = run.z_star;
  s.name = instance.name;
  return s;
}

double gnn_error(const GnnModel& model, const std::vector<RegressionSample>& samples) {
  std::vector<double> preds, trues;
  for (const auto& s : samples) {
    preds.push_back(predict_objective(model, s.graph));
    trues.push_back(s.z_star);
  }
  return relative_error(preds, trues);
}

double lp_baseline_error(const std::vector<RegressionSample>& samples) {
  std::vector<double> preds, trues;
  for (const auto& s : samples) {
    preds.push_back(s.z_lp);
    trues.push_back(s.z_star);
  }
  return relative_error(preds, trues);
}

DynamicEvaluation evaluate_dynamic(const std::vector<DynamicSample>& train, const std::vector<DynamicSample>& val,
                                   const std::vector<DynamicSample>& test, const LogisticModel& model) {
  DynamicEvaluation ev;
  ev.model = model;
  ev.eps = val.empty() ? 0.0 : tune_epsilon(val);
  std::vector<int> train_labels, labels;
  for (const auto& s : train) train_labels.push_back(s.label);
  const int majority = majority_class(train_labels);
  std::vector<int> p_major, p_est, p_rank1, p_gnn0, p_gnn, p_dyn;
  for (const auto& s : test) {
    labels.push_back(s.label);
    p_major.push_back(majority);
    p_est.push_back(c_est(s));
    p_rank1.push_back(c_rank1(s));
    p_gnn0.push_back(c_gnn(s.gnn_prediction, s.incumbent, 0.0));
    p_gnn.push_back(c_gnn(s.gnn_prediction, s.incumbent, ev.eps));
    p_dyn.push_back(c_dyn(model, s.features()).second);
  }
  ev.reports = {classification_report("majority", labels, p_major),
                classification_report("best_estimate", labels, p_est),
                classification_report("rank1", labels, p_rank1),
                classification_report("gnn_eps0", labels, p_gnn0),
                classification_report("gnn_eps_tuned", labels, p_gnn),
                classification_report("dynamic", labels, p_dyn)};
  return ev;
}

}  // namespace objval
