#include "objval/dynamics.hpp"

#include <cmath>
#include <sstream>

#include "objval/errors.hpp"
#include "objval/text_io.hpp"

namespace objval {

namespace {
constexpr const char* kSamplesFormat = "dyn-v1";
constexpr double kMedianGapTol = 1e-9;
constexpr double kRatioTol = 1e-12;
}  // namespace

double gap(double incumbent, double lower_bound) {
  if (!std::isfinite(incumbent) || lower_bound == -kInf) return 1.0;
  const double lower = std::min(lower_bound, incumbent);
  if (incumbent * lower < 0.0) return 1.0;
  return std::abs(incumbent - lower) / std::max({std::abs(incumbent), std::abs(lower), kGapEpsilon});
}

double tree_weight(const std::vector<int>& leaf_depths) {
  double w = 0.0;
  for (const int d : leaf_depths) w += std::ldexp(1.0, -d);
  return w;
}

double median_gap(double incumbent, std::optional<double> median_open_bound, double first_incumbent,
                  double z_lp_root) {
  if (!median_open_bound) return 0.0;
  const double denom = std::abs(first_incumbent - z_lp_root);
  if (denom <= kMedianGapTol) return 0.0;
  return std::abs(incumbent - *median_open_bound) / denom;
}

double open_trend(const std::vector<double>& values, int h) {
  if (h < 1) throw ConfigError("trend window must be >= 1");
  const auto points = static_cast<std::size_t>(h) + 1;
  if (values.size() < points) {
    throw InsufficientHistory("trend needs " + std::to_string(points) + " observations, have " +
                              std::to_string(values.size()));
  }
  const std::size_t first = values.size() - points;
  const double x_mean = static_cast<double>(h) / 2.0;
  double y_mean = 0.0;
  for (std::size_t k = 0; k < points; ++k) y_mean += values[first + k];
  y_mean /= static_cast<double>(points);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t k = 0; k < points; ++k) {
    const double dx = static_cast<double>(k) - x_mean;
    sxy += dx * (values[first + k] - y_mean);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

double gnn_ratio(double prediction, double incumbent) {
  if (std::abs(incumbent) <= kRatioTol) throw DegenerateIncumbent("incumbent too close to zero for the ratio feature");
  return prediction / incumbent;
}

bool is_optimal_label(double incumbent, double z_star) {
  return std::abs(incumbent - z_star) <= 1e-6 * (1.0 + std::abs(z_star));
}

double est_margin(double incumbent, double best_estimate_min) {
  if (!std::isfinite(incumbent)) return kInf;
  if (best_estimate_min == kInf) return -kInf;
  return incumbent - best_estimate_min;
}

Collector::Collector(std::string instance, std::uint64_t solve_seed, double gnn_prediction,
                     const CollectParams& params)
    : instance_(std::move(instance)),
      solve_seed_(solve_seed),
      prediction_(gnn_prediction),
      params_(params),
      rng_(derive_seed(derive_seed(params.seed, fnv1a64(instance_)), solve_seed)) {
  if (params.warmup < params.trend_window) throw ConfigError("warmup must cover the trend window");
  if (!(params.p_sample >= 0.0 && params.p_sample <= 1.0)) throw ConfigError("p_sample must be in [0, 1]");
}

void Collector::on_step(const TreeTracker& tr) {
  open_counts_.push_back(static_cast<double>(tr.open_count()));
  if (tr.has_incumbent()) est_margin_min_ = std::min(est_margin_min_, est_margin(tr.incumbent(), tr.best_estimate_min()));
  rank1_min_ = rank1_min_ < 0 ? tr.rank1_size() : std::min(rank1_min_, tr.rank1_size());

  if (tr.t() <= params_.warmup || !tr.has_incumbent()) return;
  if (!rng_.bernoulli(params_.p_sample)) return;

  DynamicSample s;
  s.instance = instance_;
  s.seed = solve_seed_;
  s.t = tr.t();
  s.incumbent = tr.incumbent();
  try {
    s.gnn_ratio = gnn_ratio(prediction_, s.incumbent);
  } catch (const DegenerateIncumbent&) {
    ++discarded_;
    return;
  }
  s.gap = gap(s.incumbent, tr.lower_bound());
  s.tree_weight = tr.tree_weight();
  s.median_gap = median_gap(s.incumbent, tr.median_open_bound(), tr.first_incumbent(), tr.root_lp());
  s.open_trend = open_trend(open_counts_, params_.trend_window);
  s.gnn_prediction = prediction_;
  s.est_margin_min = est_margin_min_;
  s.rank1_min = rank1_min_;
  samples_.push_back(std::move(s));
}

std::vector<DynamicSample> Collector::finish(double z_star, double z_lp_root) const {
  std::vector<DynamicSample> out = samples_;
  for (auto& s : out) {
    s.z_star = z_star;
    s.z_lp = z_lp_root;
    s.label = is_optimal_label(s.incumbent, z_star) ? 1 : 0;
  }
  return out;
}

CollectResult collect(const MilpInstance& instance, double gnn_prediction, const CollectParams& params,
                      const BnbParams& bnb) {
  Collector collector(instance.name, bnb.seed, gnn_prediction, params);
  CollectResult out;
  out.solve = solve(instance, bnb, &collector);
  if (out.solve.proof != ProofStatus::OptimalityProved) {
    throw CensoredRun("instance " + instance.name + " hit a limit before optimality was proved");
  }
  out.samples = collector.finish(out.solve.z_star, out.solve.z_lp_root);
  out.discarded = collector.discarded();
  return out;
}

std::vector<DynamicSample> collect_from_log(const std::vector<TreeEvent>& events, const std::string& instance,
                                            std::uint64_t solve_seed, double gnn_prediction, double z_star,
                                            double z_lp_root, const CollectParams& params) {
  Collector collector(instance, solve_seed, gnn_prediction, params);
  replay(events, collector);
  return collector.finish(z_star, z_lp_root);
}

std::string samples_to_string(const std::vector<DynamicSample>& samples, const std::string& config_hash) {
  std::string out = std::string(kSamplesFormat) + " " + (config_hash.empty() ? "-" : config_hash) + "\n";
  out += "# instance seed t gap tree_weight median_gap open_trend gnn_ratio incumbent z_star z_lp label "
         "gnn_prediction est_margin_min rank1_min\n";
  for (const auto& s : samples) {
    if (s.instance.empty() || s.instance.find_first_of(" \t\n") != std::string::npos) {
      throw FormatError("instance names in sample files must be nonempty and free of whitespace");
    }
    out += s.instance + " " + std::to_string(s.seed) + " " + std::to_string(s.t);
    for (const double v : {s.gap, s.tree_weight, s.median_gap, s.open_trend, s.gnn_ratio, s.incumbent, s.z_star, s.z_lp}) {
      out += " " + format_double(v);
    }
    out += " " + std::to_string(s.label) + " " + format_double(s.gnn_prediction) + " " +
           format_double(s.est_margin_min) + " " + std::to_string(s.rank1_min) + "\n";
  }
  return out;
}

std::vector<DynamicSample> samples_from_string(const std::string& text, std::string* config_hash) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty sample file");
  {
    std::istringstream header(line);
    std::string format, hash;
    header >> format >> hash;
    if (format != kSamplesFormat) throw FormatError("expected format dyn-v1, found '" + format + "'");
    if (config_hash != nullptr) *config_hash = hash == "-" ? "" : hash;
  }
  std::vector<DynamicSample> out;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string s; ls >> s;) tok.push_back(std::move(s));
    if (tok.size() != 15) throw FormatError("sample record needs 15 fields: " + line);
    DynamicSample s;
    try {
      s.instance = tok[0];
      s.seed = std::stoull(tok[1]);
      s.t = std::stol(tok[2]);
      s.label = std::stoi(tok[11]);
      s.rank1_min = std::stol(tok[14]);
    } catch (const std::exception&) {
      throw FormatError("malformed integer field in sample record: " + line);
    }
    s.gap = parse_double(tok[3]);
    s.tree_weight = parse_double(tok[4]);
    s.median_gap = parse_double(tok[5]);
    s.open_trend = parse_double(tok[6]);
    s.gnn_ratio = parse_double(tok[7]);
    s.incumbent = parse_double(tok[8]);
    s.z_star = parse_double(tok[9]);
    s.z_lp = parse_double(tok[10]);
    s.gnn_prediction = parse_double(tok[12]);
    s.est_margin_min = parse_double(tok[13]);
    if (s.label != 0 && s.label != 1) throw FormatError("label must be 0 or 1");
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace objval
