#include "objval/model.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "objval/errors.hpp"
#include "objval/text_io.hpp"

namespace objval {

using json = nlohmann::json;

void MilpInstance::add_ge_row(std::vector<RowEntry> coefs, double rhs_value) {
  rows.push_back(std::move(coefs));
  rhs.push_back(rhs_value);
  num_cons = static_cast<int>(rows.size());
}

void MilpInstance::add_le_row(std::vector<RowEntry> coefs, double rhs_value) {
  for (auto& e : coefs) e.coef = -e.coef;
  add_ge_row(std::move(coefs), -rhs_value);
}

std::vector<char> MilpInstance::integer_mask() const {
  std::vector<char> mask(static_cast<std::size_t>(num_vars), 0);
  for (const int j : integer_set) {
    if (j >= 0 && j < num_vars) mask[static_cast<std::size_t>(j)] = 1;
  }
  return mask;
}

MilpInstance make_instance(std::string name, int n) {
  MilpInstance inst;
  inst.name = std::move(name);
  inst.num_vars = n;
  inst.obj.assign(static_cast<std::size_t>(n), 0.0);
  inst.var_lower.assign(static_cast<std::size_t>(n), 0.0);
  inst.var_upper.assign(static_cast<std::size_t>(n), kInf);
  inst.continuous_set.resize(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) inst.continuous_set[static_cast<std::size_t>(j)] = j;
  return inst;
}

void make_binary(MilpInstance& instance, int j) {
  auto it = std::lower_bound(instance.integer_set.begin(), instance.integer_set.end(), j);
  if (it == instance.integer_set.end() || *it != j) instance.integer_set.insert(it, j);
  auto ct = std::lower_bound(instance.continuous_set.begin(), instance.continuous_set.end(), j);
  if (ct != instance.continuous_set.end() && *ct == j) instance.continuous_set.erase(ct);
  instance.var_lower[static_cast<std::size_t>(j)] = 0.0;
  instance.var_upper[static_cast<std::size_t>(j)] = 1.0;
}

std::vector<std::string> validate(const MilpInstance& inst) {
  std::vector<std::string> out;
  const auto n = static_cast<std::size_t>(std::max(inst.num_vars, 0));
  const auto m = static_cast<std::size_t>(std::max(inst.num_cons, 0));
  if (inst.num_vars < 0) out.emplace_back("num_vars negative");
  if (inst.num_cons < 0) out.emplace_back("num_cons negative");
  if (inst.obj.size() != n) out.emplace_back("obj length " + std::to_string(inst.obj.size()));
  if (inst.rows.size() != m) out.emplace_back("rows length " + std::to_string(inst.rows.size()));
  if (inst.rhs.size() != m) out.emplace_back("rhs length " + std::to_string(inst.rhs.size()));
  if (inst.var_lower.size() != n) out.emplace_back("var_lower length " + std::to_string(inst.var_lower.size()));
  if (inst.var_upper.size() != n) out.emplace_back("var_upper length " + std::to_string(inst.var_upper.size()));
  if (!out.empty()) return out;

  std::vector<int> seen(n, 0);
  for (const int j : inst.integer_set) {
    if (j < 0 || static_cast<std::size_t>(j) >= n) {
      out.push_back("integer_set index out of range " + std::to_string(j));
    } else {
      seen[static_cast<std::size_t>(j)] |= 1;
    }
  }
  for (const int j : inst.continuous_set) {
    if (j < 0 || static_cast<std::size_t>(j) >= n) {
      out.push_back("continuous_set index out of range " + std::to_string(j));
    } else if (seen[static_cast<std::size_t>(j)] & 1) {
      out.push_back("partition overlap at " + std::to_string(j));
      seen[static_cast<std::size_t>(j)] |= 2;
    } else {
      seen[static_cast<std::size_t>(j)] |= 2;
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (seen[j] == 0) out.push_back("partition missing " + std::to_string(j));
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(inst.obj[j])) out.push_back("non-finite obj at " + std::to_string(j));
    if (std::isnan(inst.var_lower[j]) || std::isnan(inst.var_upper[j]) ||
        inst.var_lower[j] > inst.var_upper[j]) {
      out.push_back("bounds inverted at " + std::to_string(j));
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (inst.rows[i].empty()) {
      out.push_back("empty row " + std::to_string(i));
      continue;
    }
    bool nonzero = false;
    for (const auto& e : inst.rows[i]) {
      if (e.idx < 0 || static_cast<std::size_t>(e.idx) >= n) {
        out.push_back("row " + std::to_string(i) + " index out of range " + std::to_string(e.idx));
      }
      if (!std::isfinite(e.coef)) {
        out.push_back("non-finite coefficient in row " + std::to_string(i));
      }
      if (e.coef != 0.0) nonzero = true;
    }
    if (!nonzero) out.push_back("empty row " + std::to_string(i));
    if (!std::isfinite(inst.rhs[i])) out.push_back("non-finite rhs at " + std::to_string(i));
  }
  return out;
}

MilpInstance negate_to_min(const MilpInstance& instance) {
  MilpInstance out = instance;
  for (auto& c : out.obj) c = -c;
  out.maximize_origin = !instance.maximize_origin;
  return out;
}

double row_activity(const MilpInstance& instance, int row, const std::vector<double>& x) {
  double act = 0.0;
  for (const auto& e : instance.rows[static_cast<std::size_t>(row)]) {
    act += e.coef * x[static_cast<std::size_t>(e.idx)];
  }
  return act;
}

double objective_value(const MilpInstance& instance, const std::vector<double>& x) {
  double z = 0.0;
  for (std::size_t j = 0; j < instance.obj.size(); ++j) z += instance.obj[j] * x[j];
  return z;
}

bool is_feasible(const MilpInstance& instance, const std::vector<double>& x, double tol) {
  if (x.size() != static_cast<std::size_t>(instance.num_vars)) return false;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] < instance.var_lower[j] - tol || x[j] > instance.var_upper[j] + tol) return false;
  }
  for (const int j : instance.integer_set) {
    const double v = x[static_cast<std::size_t>(j)];
    if (std::abs(v - std::round(v)) > tol) return false;
  }
  for (int i = 0; i < instance.num_cons; ++i) {
    if (row_activity(instance, i, x) < instance.rhs[static_cast<std::size_t>(i)] - tol) return false;
  }
  return true;
}

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::NodeProcessed: return "NodeProcessed";
    case EventKind::Branched: return "Branched";
    case EventKind::Pruned: return "Pruned";
    case EventKind::NewIncumbent: return "NewIncumbent";
    case EventKind::Finished: return "Finished";
  }
  return "?";
}

const char* to_string(ProofStatus proof) {
  switch (proof) {
    case ProofStatus::OptimalityProved: return "OptimalityProved";
    case ProofStatus::NodeLimit: return "NodeLimit";
    case ProofStatus::TimeLimit: return "TimeLimit";
  }
  return "?";
}

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::Optimal: return "Optimal";
    case LpStatus::Infeasible: return "Infeasible";
    case LpStatus::Unbounded: return "Unbounded";
  }
  return "?";
}

namespace {

constexpr const char* kInstanceFormat = "milp-v1";

json number_array(const std::vector<double>& values) {
  json arr = json::array();
  for (const double v : values) arr.push_back(format_double(v));
  return arr;
}

std::vector<double> parse_number_array(const json& arr) {
  std::vector<double> out;
  out.reserve(arr.size());
  for (const auto& v : arr) out.push_back(parse_double(v.get<std::string>()));
  return out;
}

}  // namespace

std::string instance_to_string(const MilpInstance& inst, const std::string& config_hash) {
  json doc;
  doc["format"] = kInstanceFormat;
  doc["config_hash"] = config_hash;
  doc["name"] = inst.name;
  doc["n"] = inst.num_vars;
  doc["m"] = inst.num_cons;
  doc["obj"] = number_array(inst.obj);
  json rows = json::array();
  for (const auto& row : inst.rows) {
    json r = json::array();
    for (const auto& e : row) r.push_back({{"idx", e.idx}, {"coef", format_double(e.coef)}});
    rows.push_back(std::move(r));
  }
  doc["rows"] = std::move(rows);
  doc["rhs"] = number_array(inst.rhs);
  doc["integer_set"] = inst.integer_set;
  json bounds = json::array();
  for (std::size_t j = 0; j < inst.var_lower.size(); ++j) {
    bounds.push_back({format_double(inst.var_lower[j]), format_double(inst.var_upper[j])});
  }
  doc["bounds"] = std::move(bounds);
  doc["maximize_origin"] = inst.maximize_origin;
  return doc.dump(1) + "\n";
}

MilpInstance instance_from_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("instance parse error: ") + e.what());
  }
  if (doc.value("format", "") != kInstanceFormat) {
    throw FormatError("expected format " + std::string(kInstanceFormat));
  }
  try {
    MilpInstance inst;
    inst.name = doc.at("name").get<std::string>();
    inst.num_vars = doc.at("n").get<int>();
    inst.num_cons = doc.at("m").get<int>();
    inst.obj = parse_number_array(doc.at("obj"));
    for (const auto& r : doc.at("rows")) {
      std::vector<RowEntry> row;
      for (const auto& e : r) {
        row.push_back({e.at("idx").get<int>(), parse_double(e.at("coef").get<std::string>())});
      }
      inst.rows.push_back(std::move(row));
    }
    inst.rhs = parse_number_array(doc.at("rhs"));
    inst.integer_set = doc.at("integer_set").get<std::vector<int>>();
    std::sort(inst.integer_set.begin(), inst.integer_set.end());
    for (const auto& b : doc.at("bounds")) {
      inst.var_lower.push_back(parse_double(b.at(0).get<std::string>()));
      inst.var_upper.push_back(parse_double(b.at(1).get<std::string>()));
    }
    inst.maximize_origin = doc.at("maximize_origin").get<bool>();
    const auto mask = inst.integer_mask();
    for (int j = 0; j < inst.num_vars; ++j) {
      if (!mask[static_cast<std::size_t>(j)]) inst.continuous_set.push_back(j);
    }
    return inst;
  } catch (const json::exception& e) {
    throw FormatError(std::string("instance schema error: ") + e.what());
  }
}

void write_instance(std::ostream& out, const MilpInstance& instance, const std::string& config_hash) {
  out << instance_to_string(instance, config_hash);
}

MilpInstance read_instance(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  return instance_from_string(ss.str());
}

namespace {

EventKind parse_kind(const std::string& s) {
  for (const EventKind k : {EventKind::NodeProcessed, EventKind::Branched, EventKind::Pruned,
                            EventKind::NewIncumbent, EventKind::Finished}) {
    if (s == to_string(k)) return k;
  }
  throw FormatError("unknown event kind '" + s + "'");
}

}  // namespace

void write_event_log(std::ostream& out, const std::vector<TreeEvent>& events) {
  out << "# events-v1 t kind node depth z est_down est_up aux open\n";
  for (const auto& e : events) {
    out << e.t << ' ' << to_string(e.kind) << ' ' << e.node << ' ' << e.depth << ' '
        << format_double(e.z) << ' ' << format_double(e.est_down) << ' '
        << format_double(e.est_up) << ' ' << e.aux << ' ' << e.open_count << '\n';
  }
}

std::vector<TreeEvent> read_event_log(std::istream& in) {
  std::vector<TreeEvent> events;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# events-v1", 0) != 0) throw FormatError("expected events-v1 header");
      header = true;
      continue;
    }
    if (!header) throw FormatError("missing events-v1 header");
    std::istringstream ls(line);
    TreeEvent e;
    std::string kind, z, ed, eu;
    if (!(ls >> e.t >> kind >> e.node >> e.depth >> z >> ed >> eu >> e.aux >> e.open_count)) {
      throw FormatError("malformed event line: " + line);
    }
    e.kind = parse_kind(kind);
    e.z = parse_double(z);
    e.est_down = parse_double(ed);
    e.est_up = parse_double(eu);
    events.push_back(e);
  }
  return events;
}

}  // namespace objval
