#include "objval/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "objval/errors.hpp"
#include "objval/experiment.hpp"
#include "objval/graph_features.hpp"
#include "objval/text_io.hpp"

namespace objval {

namespace fs = std::filesystem;

namespace {

/// Runtime failure attributed to a pipeline stage.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what, bool usage)
      : Error(what), stage_(std::move(stage)), usage_(usage) {}
  const std::string& stage() const { return stage_; }
  /// Bad parameter values rather than a failure while running.
  bool usage() const { return usage_; }

 private:
  std::string stage_;
  bool usage_;
};

void progress(const std::string& stage, const std::string& message) {
  std::cerr << "[" << stage << "] " << message << std::endl;
}

/// Canonical "key=value" list hashed into every artifact a stage writes.
class ConfigText {
 public:
  explicit ConfigText(const std::string& stage) : text_(stage) {}
  template <class T>
  ConfigText& add(const std::string& key, const T& value) {
    std::ostringstream ss;
    if constexpr (std::is_floating_point_v<T>) {
      ss << format_double(value);
    } else {
      ss << value;
    }
    text_ += " " + key + "=" + ss.str();
    return *this;
  }
  std::string hash() const { return hash_hex(text_); }
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

// ---------------------------------------------------------------- gen

struct GenOptions {
  std::string family;
  int count = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::string scale = "desk";
  int sc_rows = 0, sc_cols = 0;
  double sc_density = 0.0;
  int ca_items = 0, ca_bids = 0;
  int gisp_nodes = 0;
  double gisp_edge_prob = 0.0, gisp_alpha = 0.0;
};

GenConfig gen_config(const GenOptions& o, Family family) {
  GenConfig cfg = preset(family, parse_scale(o.scale), o.seed);
  if (o.sc_rows > 0) cfg.set_cover.rows = o.sc_rows;
  if (o.sc_cols > 0) cfg.set_cover.cols = o.sc_cols;
  if (o.sc_density > 0) cfg.set_cover.density = o.sc_density;
  if (o.ca_items > 0) cfg.auction.items = o.ca_items;
  if (o.ca_bids > 0) cfg.auction.bids = o.ca_bids;
  if (o.gisp_nodes > 0) cfg.gisp.graph_nodes = o.gisp_nodes;
  if (o.gisp_edge_prob > 0) cfg.gisp.edge_prob = o.gisp_edge_prob;
  if (o.gisp_alpha > 0) cfg.gisp.alpha = o.gisp_alpha;
  return cfg;
}

std::string instance_name(Family family, int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s-%04d", family_tag(family), index);
  return buf;
}

void run_gen(const GenOptions& o) {
  if (o.count < 1) throw ConfigError("--count must be >= 1");
  const Family family = parse_family(o.family);
  const GenConfig base = gen_config(o, family);
  check(base);
  const std::string hash = ConfigText("gen").add("config", describe(base)).add("count", o.count).hash();

  std::vector<GeneratedInstance> generated;
  if (family == Family::Mixed) {
    std::vector<GenConfig> cfgs;
    for (const Family f : {Family::SetCovering, Family::CombAuction, Family::Gisp}) cfgs.push_back(gen_config(o, f));
    generated = gen_mixed(o.count, cfgs, o.seed);
  } else {
    for (int k = 0; k < o.count; ++k) {
      GenConfig cfg = base;
      cfg.seed = derive_seed(o.seed, static_cast<std::uint64_t>(k));
      generated.push_back({family, generate(cfg), cfg.seed});
    }
  }
  std::string manifest = "manifest-v1 " + hash + "\n# file family generator_config\n";
  for (std::size_t k = 0; k < generated.size(); ++k) {
    auto& g = generated[k];
    g.instance.name = instance_name(g.family, static_cast<int>(k));
    const std::string file = g.instance.name + ".milp";
    write_file_atomic(fs::path(o.out) / file, instance_to_string(g.instance, hash));
    GenConfig cfg = gen_config(o, g.family);
    cfg.seed = g.seed;
    manifest += file + " " + family_tag(g.family) + " " + describe(cfg) + "\n";
  }
  write_file_atomic(fs::path(o.out) / "manifest.txt", manifest);
  progress("gen", "wrote " + std::to_string(generated.size()) + " instances to " + o.out);
}

// ---------------------------------------------------------------- solve

struct SolveOptions {
  std::string in;
  std::string out;
  std::string log;
  long node_limit = 1'000'000;
  int seeds = 1;
};

std::vector<MilpInstance> read_instances(const std::string& path) {
  std::vector<MilpInstance> out;
  if (fs::is_directory(path)) {
    for (const auto& f : list_files(path, ".milp")) out.push_back(instance_from_string(read_file(f)));
  } else {
    out.push_back(instance_from_string(read_file(path)));
  }
  if (out.empty()) throw ConfigError("no .milp files in " + path);
  return out;
}

std::string run_stem(const std::string& instance, std::uint64_t seed) {
  return instance + ".s" + std::to_string(seed);
}

std::string event_log_text(const std::vector<TreeEvent>& events) {
  std::ostringstream ss;
  write_event_log(ss, events);
  return ss.str();
}

void run_solve(const SolveOptions& o) {
  if (o.seeds < 1) throw ConfigError("--seeds must be >= 1");
  if (o.out.empty() && o.log.empty() && fs::is_directory(o.in)) throw ConfigError("solving a directory needs --out");
  const auto instances = read_instances(o.in);
  const std::string hash = ConfigText("solve").add("node_limit", o.node_limit).add("seeds", o.seeds).hash();
  struct Job {
    std::size_t instance;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    for (int s = 0; s < o.seeds; ++s) jobs.push_back({i, static_cast<std::uint64_t>(s)});
  }
  std::vector<SolvedRun> runs(jobs.size());
  parallel_for(jobs.size(), worker_count(), [&](std::size_t k) {
    const auto& inst = instances[jobs[k].instance];
    BnbParams bnb;
    bnb.node_limit = o.node_limit;
    bnb.seed = jobs[k].seed;
    runs[k] = {inst.name, jobs[k].seed, solve(inst, bnb)};
    if (!o.out.empty()) {
      const auto stem = fs::path(o.out) / run_stem(inst.name, jobs[k].seed);
      write_file_atomic(fs::path(stem).concat(".events"), event_log_text(runs[k].result.event_log));
      write_file_atomic(fs::path(stem).concat(".sol"), solved_run_to_string(runs[k], hash));
      if (jobs[k].seed == 0 && runs[k].result.has_solution) {
        write_file_atomic(fs::path(o.out) / (inst.name + ".graph"),
                          graph_to_string(regression_sample(inst, runs[k].result).graph, hash));
      }
    }
  });
  if (!o.log.empty()) {
    if (runs.size() != 1) throw ConfigError("--log needs a single instance and one seed");
    write_file_atomic(o.log, event_log_text(runs[0].result.event_log));
  }
  long proved = 0;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const auto& r = runs[k].result;
    proved += r.proof == ProofStatus::OptimalityProved;
    if (runs.size() == 1) {
      const auto& inst = instances[jobs[k].instance];
      std::cout << inst.name << " z_star " << format_double(r.has_solution ? inst.user_objective(r.z_star) : kInf)
                << " nodes " << r.node_count << " proof " << to_string(r.proof) << "\n";
    }
  }
  progress("solve", std::to_string(runs.size()) + " runs, " + std::to_string(proved) + " proved optimal");
}

/// Seed-0 runs of a solve directory in name order with their root graphs.
struct SolvedSet {
  std::vector<SolvedRun> runs;
  std::vector<BipartiteGraph> graphs;
  std::vector<std::string> hashes;
};

SolvedSet read_solved(const std::string& dir) {
  SolvedSet set;
  for (const auto& f : list_files(dir, ".s0.sol")) {
    std::string hash;
    auto run = solved_run_from_string(read_file(f), &hash);
    if (!run.result.has_solution) continue;
    set.graphs.push_back(graph_from_string(read_file(fs::path(dir) / (run.instance + ".graph"))));
    set.runs.push_back(std::move(run));
    set.hashes.push_back(hash);
  }
  if (set.runs.empty()) throw ConfigError("no solved runs in " + dir);
  return set;
}

std::vector<RegressionSample> regression_split(const SolvedSet& set, const std::vector<Split>& splits, Split which) {
  std::vector<RegressionSample> out;
  for (std::size_t k = 0; k < set.runs.size(); ++k) {
    if (splits[k] != which) continue;
    out.push_back({set.graphs[k], set.graphs[k].z_lp_root, set.runs[k].result.z_star, set.runs[k].instance});
  }
  return out;
}

struct SplitOptions {
  double val_frac = 0.15;
  double test_frac = 0.15;
};

// ---------------------------------------------------------------- train-gnn

struct TrainGnnOptions {
  std::string data;
  std::string out;
  std::string target = "t3";
  GnnHyperparams hp;
  SplitOptions split;
};

void run_train_gnn(const TrainGnnOptions& o) {
  GnnHyperparams hp = o.hp;
  hp.target = parse_target_kind(o.target);
  const auto set = read_solved(o.data);
  const auto splits = assign_splits(set.runs.size(), o.split.val_frac, o.split.test_frac);
  const auto train = regression_split(set, splits, Split::Train);
  const auto val = regression_split(set, splits, Split::Val);
  ConfigText cfg("train-gnn");
  cfg.add("target", to_string(hp.target)).add("hidden", hp.hidden).add("lr", hp.lr).add("beta1", hp.beta1);
  cfg.add("beta2", hp.beta2).add("epochs", hp.epochs).add("batch_size", hp.batch_size).add("patience", hp.patience);
  cfg.add("seed", hp.seed).add("val_frac", o.split.val_frac).add("test_frac", o.split.test_frac);
  cfg.add("data", hash_hex(set.hashes.front()));
  const auto res = train_gnn(train, val, hp);
  write_file_atomic(o.out, gnn_to_string(res.model, cfg.hash()));
  std::string curve = "epoch,train_loss,val_loss\n";
  for (std::size_t e = 0; e < res.train_loss.size(); ++e) {
    curve += std::to_string(e) + "," + format_double(res.train_loss[e]) + "," +
             (e < res.val_loss.size() ? format_double(res.val_loss[e]) : "") + "\n";
  }
  write_file_atomic(o.out + ".loss.csv", curve);
  progress("train-gnn", std::string(to_string(hp.target)) + ": best epoch " + std::to_string(res.best_epoch) +
                            (val.empty() ? "" : ", val error " + format_double(gnn_error(res.model, val)) + "%"));
}

// ---------------------------------------------------------------- collect

struct CollectOptions {
  std::string data;
  std::string model;
  std::string out;
  CollectParams params;
  SplitOptions split;
};

void run_collect(const CollectOptions& o) {
  const auto set = read_solved(o.data);
  const auto splits = assign_splits(set.runs.size(), o.split.val_frac, o.split.test_frac);
  std::map<std::string, std::size_t> index;
  for (std::size_t k = 0; k < set.runs.size(); ++k) index[set.runs[k].instance] = k;
  const std::string model_text = read_file(o.model);
  const GnnModel model = gnn_from_string(model_text);

  std::vector<fs::path> sol_files;
  for (const auto& f : list_files(o.data, ".sol")) {
    const std::string name = f.filename().string();
    if (index.count(name.substr(0, name.find(".s")))) sol_files.push_back(f);
  }
  std::vector<std::vector<DynamicSample>> per_run(sol_files.size());
  std::vector<int> censored(sol_files.size(), 0);
  parallel_for(sol_files.size(), worker_count(), [&](std::size_t k) {
    const auto run = solved_run_from_string(read_file(sol_files[k]));
    if (run.result.proof != ProofStatus::OptimalityProved) {
      censored[k] = 1;
      return;
    }
    const std::size_t i = index.at(run.instance);
    std::ifstream events(fs::path(sol_files[k]).replace_extension(".events"));
    if (!events) throw Error("missing event log for " + sol_files[k].string());
    const double pred = predict_objective(model, set.graphs[i]);
    per_run[k] = collect_from_log(read_event_log(events), run.instance, run.seed, pred, run.result.z_star,
                                  run.result.z_lp_root, o.params);
  });
  ConfigText cfg("collect");
  cfg.add("warmup", o.params.warmup).add("p_sample", o.params.p_sample).add("trend_window", o.params.trend_window);
  cfg.add("seed", o.params.seed).add("val_frac", o.split.val_frac).add("test_frac", o.split.test_frac);
  cfg.add("model", hash_hex(model_text));
  std::map<Split, std::vector<DynamicSample>> by_split;
  long dropped = 0;
  for (std::size_t k = 0; k < sol_files.size(); ++k) {
    dropped += censored[k];
    const std::string name = sol_files[k].filename().string();
    auto& dst = by_split[splits[index.at(name.substr(0, name.find(".s")))]];
    dst.insert(dst.end(), per_run[k].begin(), per_run[k].end());
  }
  for (const Split s : {Split::Train, Split::Val, Split::Test}) {
    write_file_atomic(fs::path(o.out) / (std::string(to_string(s)) + ".dyn"),
                      samples_to_string(by_split[s], cfg.hash()));
    progress("collect", std::string(to_string(s)) + ": " + std::to_string(by_split[s].size()) + " samples");
  }
  if (dropped > 0) progress("collect", std::to_string(dropped) + " censored runs dropped");
}

// ---------------------------------------------------------------- train-dyn, classify, tune-eps

struct TrainDynOptions {
  std::string samples;
  std::string out;
  LogisticHyperparams hp;
};

std::vector<DynamicSample> read_samples(const std::string& path, std::string* hash = nullptr) {
  return samples_from_string(read_file(path), hash);
}

void run_train_dyn(const TrainDynOptions& o) {
  std::string data_hash;
  const auto samples = read_samples(o.samples, &data_hash);
  const auto res = train_logistic(samples, o.hp);
  ConfigText cfg("train-dyn");
  cfg.add("lambda", o.hp.lambda).add("lr", o.hp.lr).add("epochs", o.hp.epochs).add("threshold", o.hp.threshold);
  cfg.add("data", data_hash);
  write_file_atomic(o.out, logistic_to_string(res.model, cfg.hash()));
  progress("train-dyn", std::to_string(samples.size()) + " samples, final loss " +
                            format_double(res.loss_curve.back()));
}

struct ClassifyOptions {
  std::string model;
  std::string samples;
  std::string out;
};

void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
  } else {
    write_file_atomic(path, text);
  }
}

void run_classify(const ClassifyOptions& o) {
  const auto model = logistic_from_string(read_file(o.model));
  std::string csv = "instance,seed,t,probability,class,label\n";
  for (const auto& s : read_samples(o.samples)) {
    const auto [p, c] = c_dyn(model, s.features());
    csv += s.instance + "," + std::to_string(s.seed) + "," + std::to_string(s.t) + "," + format_double(p) + "," +
           std::to_string(c) + "," + std::to_string(s.label) + "\n";
  }
  emit(o.out, csv);
}

struct TuneEpsOptions {
  std::string samples;
  std::string out;
};

void run_tune_eps(const TuneEpsOptions& o) {
  const auto samples = read_samples(o.samples);
  if (samples.empty()) throw ConfigError("no samples in " + o.samples);
  emit(o.out, format_double(tune_epsilon(samples)) + "\n");
}

// ---------------------------------------------------------------- eval

struct EvalOptions {
  std::string data;
  std::vector<std::string> gnn;
  std::string samples;
  std::string dyn;
  std::string out;
  SplitOptions split;
};

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

void write_report(const std::string& dir, const std::string& stem, const std::vector<std::vector<std::string>>& rows) {
  write_file_atomic(fs::path(dir) / (stem + ".txt"), format_table(rows));
  write_file_atomic(fs::path(dir) / (stem + ".csv"), format_csv(rows));
}

void run_eval(const EvalOptions& o) {
  if (o.data.empty() == !o.gnn.empty()) throw ConfigError("--data and --gnn go together");
  if (o.samples.empty() != o.dyn.empty()) throw ConfigError("--samples and --dyn go together");
  if (o.data.empty() && o.samples.empty()) throw ConfigError("nothing to evaluate");
  std::string summary;
  if (!o.data.empty()) {
    const auto set = read_solved(o.data);
    const auto splits = assign_splits(set.runs.size(), o.split.val_frac, o.split.test_frac);
    const auto test = regression_split(set, splits, Split::Test);
    if (test.empty()) throw ConfigError("empty test split");
    std::vector<std::vector<std::string>> rows{{"predictor", "target", "relative_error_pct", "n"}};
    rows.push_back({"root_lp", "-", fixed4(lp_baseline_error(test)), std::to_string(test.size())});
    for (const auto& path : o.gnn) {
      const auto model = gnn_from_string(read_file(path));
      rows.push_back({fs::path(path).filename().string(), to_string(model.target),
                      fixed4(gnn_error(model, test)), std::to_string(test.size())});
    }
    write_report(o.out, "regression", rows);
    summary += format_table(rows) + "\n";
  }
  if (!o.samples.empty()) {
    const auto load = [&](const char* split) { return read_samples((fs::path(o.samples) / (std::string(split) + ".dyn")).string()); };
    const auto train = load("train");
    const auto val = load("val");
    const auto test = load("test");
    const auto model = logistic_from_string(read_file(o.dyn));
    const auto ev = evaluate_dynamic(train, val, test, model);
    write_report(o.out, "classification", report_rows(ev.reports));
    std::vector<std::vector<std::string>> imp{{"feature", "importance"}};
    for (const auto& [name, v] : feature_importance(model)) imp.push_back({name, fixed4(v)});
    write_report(o.out, "importance", imp);
    std::vector<std::vector<std::string>> curve{{"eps", "positive_rate"}};
    const auto grid = epsilon_grid();
    const auto rates = positive_rate_curve(test);
    for (std::size_t k = 0; k < grid.size(); ++k) curve.push_back({format_double(grid[k]), format_double(rates[k])});
    write_file_atomic(fs::path(o.out) / "eps_curve.csv", format_csv(curve));
    write_file_atomic(fs::path(o.out) / "eps.txt", format_double(ev.eps) + "\n");
    summary += format_table(report_rows(ev.reports)) + "\n" + format_table(imp);
  }
  std::cout << summary;
  progress("eval", "reports written to " + o.out);
}

// ---------------------------------------------------------------- phase-analysis

struct PhaseOptions {
  std::string instances;
  std::string out;
  int seeds = 3;
  long node_limit = 1'000'000;
};

void run_phase_analysis(const PhaseOptions& o) {
  const auto instances = read_instances(o.instances);
  const std::size_t n = instances.size() * static_cast<std::size_t>(o.seeds);
  std::vector<std::optional<RunPhases>> phases(n);
  parallel_for(n, worker_count(), [&](std::size_t k) {
    const auto& inst = instances[k / static_cast<std::size_t>(o.seeds)];
    BnbParams bnb;
    bnb.node_limit = o.node_limit;
    bnb.seed = k % static_cast<std::size_t>(o.seeds);
    const auto res = solve(inst, bnb);
    if (res.proof == ProofStatus::OptimalityProved) phases[k] = run_phases(res, inst.name, bnb.seed);
  });
  std::vector<RunPhases> runs;
  long censored = 0;
  for (auto& p : phases) {
    if (p) {
      runs.push_back(*p);
    } else {
      ++censored;
    }
  }
  if (censored > 0) progress("phase-analysis", "warning: " + std::to_string(censored) + " censored runs excluded");
  const auto b = summarize_phases(std::move(runs), censored);
  auto row = [](const std::string& label, const RunPhases& r) {
    return std::vector<std::string>{label, fixed4(r.feasibility), fixed4(r.improve_far), fixed4(r.improve_near),
                                    fixed4(r.proving), fixed4(r.first_branch), std::to_string(r.nodes)};
  };
  const std::vector<std::string> header{"run", "feasibility", "improve_far", "improve_near", "proving",
                                        "first_branch", "nodes"};
  std::vector<std::vector<std::string>> per_run{header}, mean{header};
  for (const auto& r : b.runs) per_run.push_back(row(r.instance + ".s" + std::to_string(r.seed), r));
  mean.push_back(row("mean", b.mean));
  write_file_atomic(fs::path(o.out) / "phases.csv", format_csv(per_run));
  write_report(o.out, "phase_mean", mean);
  std::cout << format_table(mean);
}

// ---------------------------------------------------------------- pipeline

struct PipelineOptions {
  GenOptions gen;
  long node_limit = 1'000'000;
  GnnHyperparams gnn;
  CollectParams collect;
  LogisticHyperparams dyn;
  SplitOptions split;
};

template <class F>
void stage(const std::string& name, F&& f) {
  try {
    f();
  } catch (const StageError&) {
    throw;
  } catch (const ConfigError& e) {
    throw StageError(name, e.what(), true);
  } catch (const std::exception& e) {
    throw StageError(name, e.what(), false);
  }
}

/// Stage seeds are derived from the master seed so that one --seed fixes
/// the whole run.
void run_pipeline(PipelineOptions o) {
  o.gnn.seed = derive_seed(o.gen.seed, 0x100 + o.gnn.seed);
  o.collect.seed = derive_seed(o.gen.seed, 0x200 + o.collect.seed);
  const fs::path root(o.gen.out);
  const std::string instances = (root / "instances").string();
  const std::string solved = (root / "solved").string();
  const std::string models = (root / "models").string();
  const std::string samples = (root / "samples").string();
  GenOptions g = o.gen;
  g.out = instances;
  stage("gen", [&] { run_gen(g); });
  stage("solve", [&] { run_solve({instances, solved, "", o.node_limit, 1}); });

  std::vector<std::string> gnn_paths;
  std::string best_path;
  double best_error = kInf;
  stage("train-gnn", [&] {
    const auto set = read_solved(solved);
    const auto splits = assign_splits(set.runs.size(), o.split.val_frac, o.split.test_frac);
    const auto val = regression_split(set, splits, Split::Val);
    for (const char* target : {"t1", "t2", "t3"}) {
      TrainGnnOptions t{solved, (fs::path(models) / (std::string(target) + ".gnn")).string(), target, o.gnn, o.split};
      run_train_gnn(t);
      gnn_paths.push_back(t.out);
      // Model selection on validation error; ties keep the later target.
      const double err = val.empty() ? 0.0 : gnn_error(gnn_from_string(read_file(t.out)), val);
      if (err <= best_error) {
        best_error = err;
        best_path = t.out;
      }
    }
    progress("train-gnn", "selected " + fs::path(best_path).filename().string());
  });
  stage("collect", [&] { run_collect({solved, best_path, samples, o.collect, o.split}); });
  const std::string dyn_model = (fs::path(models) / "dynamic.logit").string();
  stage("train-dyn", [&] { run_train_dyn({(fs::path(samples) / "train.dyn").string(), dyn_model, o.dyn}); });
  stage("eval", [&] { run_eval({solved, gnn_paths, samples, dyn_model, (root / "reports").string(), o.split}); });
}

// ---------------------------------------------------------------- argument handling

/// Reads "key = value" lines ('#' starts a comment) and prepends them as
/// --key=value to the command line unless the command line sets the key.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  std::string config;
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (args[k] == "--config" && k + 1 < args.size()) {
      config = args[++k];
    } else if (args[k].rfind("--config=", 0) == 0) {
      config = args[k].substr(9);
    } else {
      out.push_back(args[k]);
    }
  }
  if (config.empty() || out.empty()) return out;
  std::set<std::string> given;
  for (const auto& a : out) {
    if (a.rfind("--", 0) == 0) given.insert(a.substr(2, a.find('=') == std::string::npos ? std::string::npos : a.find('=') - 2));
  }
  std::istringstream in(read_file(config));
  std::vector<std::string> extra;
  for (std::string line; std::getline(in, line);) {
    line = line.substr(0, line.find('#'));
    const auto eq = line.find('=');
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    if (trim(line).empty()) continue;
    if (eq == std::string::npos) throw CLI::ParseError("config line without '=': " + line, CLI::ExitCodes::ConfigError);
    const std::string key = trim(line.substr(0, eq));
    if (!given.count(key)) extra.push_back("--" + key + "=" + trim(line.substr(eq + 1)));
  }
  out.insert(out.begin() + 1, extra.begin(), extra.end());
  return out;
}

void add_gen_flags(CLI::App* app, GenOptions& o, bool pipeline) {
  app->add_option("--family", o.family, "sc | ca | gisp | mixed")->required();
  app->add_option("--seed", o.seed, "master seed")->required();
  if (pipeline) {
    app->add_option("--count", o.count, "instances to generate")->default_val(60);
    app->add_option("--out", o.out, "output root directory");
  } else {
    app->add_option("--count", o.count, "instances to generate")->required();
    app->add_option("--out", o.out, "output directory")->required();
  }
  app->add_option("--scale", o.scale, "tiny | desk | collect | full")->default_val("desk");
  app->add_option("--sc-rows", o.sc_rows);
  app->add_option("--sc-cols", o.sc_cols);
  app->add_option("--sc-density", o.sc_density);
  app->add_option("--ca-items", o.ca_items);
  app->add_option("--ca-bids", o.ca_bids);
  app->add_option("--gisp-nodes", o.gisp_nodes);
  app->add_option("--gisp-edge-prob", o.gisp_edge_prob);
  app->add_option("--gisp-alpha", o.gisp_alpha);
}

void add_split_flags(CLI::App* app, SplitOptions& o) {
  app->add_option("--val-frac", o.val_frac)->default_val(0.15);
  app->add_option("--test-frac", o.test_frac)->default_val(0.15);
}

void add_gnn_flags(CLI::App* app, GnnHyperparams& hp) {
  app->add_option("--hidden", hp.hidden)->default_val(32);
  app->add_option("--lr", hp.lr)->default_val(1e-3);
  app->add_option("--epochs", hp.epochs)->default_val(100);
  app->add_option("--batch-size", hp.batch_size)->default_val(16);
  app->add_option("--patience", hp.patience)->default_val(15);
  app->add_option("--gnn-seed", hp.seed)->default_val(0);
}

void add_collect_flags(CLI::App* app, CollectParams& p) {
  app->add_option("--warmup", p.warmup)->default_val(100);
  app->add_option("--p-sample", p.p_sample)->default_val(0.02);
  app->add_option("--trend-window", p.trend_window)->default_val(20);
  app->add_option("--collect-seed", p.seed)->default_val(0);
}

void add_dyn_flags(CLI::App* app, LogisticHyperparams& hp) {
  app->add_option("--lambda", hp.lambda)->default_val(1e-3);
  app->add_option("--dyn-lr", hp.lr)->default_val(0.1);
  app->add_option("--dyn-epochs", hp.epochs)->default_val(500);
  app->add_option("--threshold", hp.threshold)->default_val(0.5);
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"objval: objective value prediction and phase classification for branch and bound"};
  app.require_subcommand(1);
  app.footer("Options may also come from --config FILE (key = value lines); command-line flags take precedence.");

  GenOptions gen;
  add_gen_flags(app.add_subcommand("gen", "generate benchmark instances"), gen, false);

  SolveOptions sol;
  auto* solve_cmd = app.add_subcommand("solve", "solve instances with branch and bound");
  solve_cmd->add_option("--in", sol.in, "instance file or directory")->required();
  solve_cmd->add_option("--out", sol.out, "directory for run summaries, event logs and root graphs");
  solve_cmd->add_option("--log", sol.log, "event log file (single run)");
  solve_cmd->add_option("--node-limit", sol.node_limit)->default_val(1'000'000);
  solve_cmd->add_option("--seeds", sol.seeds, "permutation seeds 0..K-1 per instance")->default_val(1);

  TrainGnnOptions tg;
  auto* tg_cmd = app.add_subcommand("train-gnn", "train the objective value regressor");
  tg_cmd->add_option("--data", tg.data, "solve output directory")->required();
  tg_cmd->add_option("--out", tg.out, "model file")->required();
  tg_cmd->add_option("--target", tg.target, "t1 | t2 | t3")->default_val("t3");
  add_gnn_flags(tg_cmd, tg.hp);
  add_split_flags(tg_cmd, tg.split);

  CollectOptions co;
  auto* co_cmd = app.add_subcommand("collect", "sample dynamic features from recorded solves");
  co_cmd->add_option("--data", co.data, "solve output directory")->required();
  co_cmd->add_option("--model", co.model, "regressor model file")->required();
  co_cmd->add_option("--out", co.out, "sample directory")->required();
  add_collect_flags(co_cmd, co.params);
  add_split_flags(co_cmd, co.split);

  TrainDynOptions td;
  auto* td_cmd = app.add_subcommand("train-dyn", "train the dynamic phase classifier");
  td_cmd->add_option("--samples", td.samples, "training sample file")->required();
  td_cmd->add_option("--out", td.out, "model file")->required();
  add_dyn_flags(td_cmd, td.hp);

  ClassifyOptions cl;
  auto* cl_cmd = app.add_subcommand("classify", "apply the dynamic classifier to samples");
  cl_cmd->add_option("--model", cl.model)->required();
  cl_cmd->add_option("--samples", cl.samples)->required();
  cl_cmd->add_option("--out", cl.out, "CSV file (default: stdout)");

  TuneEpsOptions te;
  auto* te_cmd = app.add_subcommand("tune-eps", "grid search the GNN rule margin on validation samples");
  te_cmd->add_option("--samples", te.samples)->required();
  te_cmd->add_option("--out", te.out);

  EvalOptions ev;
  auto* ev_cmd = app.add_subcommand("eval", "regression and classification reports on the test split");
  ev_cmd->add_option("--data", ev.data, "solve output directory");
  ev_cmd->add_option("--gnn", ev.gnn, "regressor model files")->delimiter(',');
  ev_cmd->add_option("--samples", ev.samples, "directory with train/val/test.dyn");
  ev_cmd->add_option("--dyn", ev.dyn, "dynamic classifier model");
  ev_cmd->add_option("--out", ev.out, "report directory")->required();
  add_split_flags(ev_cmd, ev.split);

  PhaseOptions ph;
  auto* ph_cmd = app.add_subcommand("phase-analysis", "solving phase breakdown over seeds");
  ph_cmd->add_option("--instances", ph.instances)->required();
  ph_cmd->add_option("--out", ph.out)->required();
  ph_cmd->add_option("--seeds", ph.seeds)->default_val(3);
  ph_cmd->add_option("--node-limit", ph.node_limit)->default_val(1'000'000);

  PipelineOptions pl;
  auto* pl_cmd = app.add_subcommand("pipeline", "gen, solve, train-gnn, collect, train-dyn and eval in one run");
  add_gen_flags(pl_cmd, pl.gen, true);
  pl_cmd->add_option("--node-limit", pl.node_limit)->default_val(1'000'000);
  add_gnn_flags(pl_cmd, pl.gnn);
  add_collect_flags(pl_cmd, pl.collect);
  add_dyn_flags(pl_cmd, pl.dyn);
  add_split_flags(pl_cmd, pl.split);

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    args = expand_config(args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code == 0) return 0;
    const auto subs = app.get_subcommands();
    std::cerr << (subs.empty() ? app.help() : subs.front()->help());
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help();
    return 2;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    if (cmd == "gen") stage(cmd, [&] { run_gen(gen); });
    if (cmd == "solve") stage(cmd, [&] { run_solve(sol); });
    if (cmd == "train-gnn") stage(cmd, [&] { run_train_gnn(tg); });
    if (cmd == "collect") stage(cmd, [&] { run_collect(co); });
    if (cmd == "train-dyn") stage(cmd, [&] { run_train_dyn(td); });
    if (cmd == "classify") stage(cmd, [&] { run_classify(cl); });
    if (cmd == "tune-eps") stage(cmd, [&] { run_tune_eps(te); });
    if (cmd == "eval") stage(cmd, [&] { run_eval(ev); });
    if (cmd == "phase-analysis") stage(cmd, [&] { run_phase_analysis(ph); });
    if (cmd == "pipeline") {
      if (pl.gen.out.empty()) pl.gen.out = "runs/" + pl.gen.family + "-" + pl.gen.scale + "-s" + std::to_string(pl.gen.seed);
      stage(cmd, [&] { run_pipeline(pl); });
    }
  } catch (const StageError& e) {
    std::cerr << "error: stage " << e.stage() << " failed: " << e.what() << "\n";
    return e.usage() ? 2 : 1;
  }
  return 0;
}

}  // namespace objval
