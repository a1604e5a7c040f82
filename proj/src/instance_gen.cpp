#include "objval/instance_gen.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "objval/errors.hpp"
#include "objval/rng.hpp"
#include "objval/text_io.hpp"

namespace objval {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

bool open_unit(double v) { return v > 0.0 && v < 1.0; }

}  // namespace

const char* family_tag(Family family) {
  switch (family) {
    case Family::SetCovering: return "sc";
    case Family::CombAuction: return "ca";
    case Family::Gisp: return "gisp";
    case Family::Mixed: return "mixed";
  }
  return "?";
}

Family parse_family(const std::string& tag) {
  if (tag == "sc" || tag == "setcover" || tag == "set-covering") return Family::SetCovering;
  if (tag == "ca" || tag == "cauctions" || tag == "auction") return Family::CombAuction;
  if (tag == "gisp") return Family::Gisp;
  if (tag == "mixed") return Family::Mixed;
  throw ConfigError("unknown family '" + tag + "'");
}

Scale parse_scale(const std::string& tag) {
  if (tag == "tiny") return Scale::Tiny;
  if (tag == "desk") return Scale::Desk;
  if (tag == "collect") return Scale::Collect;
  if (tag == "full") return Scale::Full;
  throw ConfigError("unknown scale '" + tag + "'");
}

GenConfig preset(Family family, Scale scale, std::uint64_t seed) {
  GenConfig cfg;
  cfg.family = family;
  cfg.seed = seed;
  switch (scale) {
    case Scale::Tiny:
      cfg.set_cover = {6, 12, 0.3};
      cfg.auction = {5, 10};
      cfg.gisp = {4, 0.6, 0.75};
      break;
    case Scale::Desk:
      break;
    case Scale::Collect:
      cfg.set_cover = {250, 500, 0.05};
      cfg.auction = {60, 300};
      cfg.gisp = {45, 0.6, 0.75};
      break;
    case Scale::Full:
      cfg.set_cover = {750, 1000, 0.05};
      cfg.auction = {200, 1000};
      cfg.gisp = {80, 0.6, 0.75};
      break;
  }
  return cfg;
}

std::string describe(const GenConfig& c) {
  std::ostringstream ss;
  ss << "family=" << family_tag(c.family);
  if (c.family == Family::SetCovering || c.family == Family::Mixed) {
    ss << " sc_rows=" << c.set_cover.rows << " sc_cols=" << c.set_cover.cols
       << " sc_density=" << format_double(c.set_cover.density);
  }
  if (c.family == Family::CombAuction || c.family == Family::Mixed) {
    ss << " ca_items=" << c.auction.items << " ca_bids=" << c.auction.bids;
  }
  if (c.family == Family::Gisp || c.family == Family::Mixed) {
    ss << " gisp_nodes=" << c.gisp.graph_nodes << " gisp_p=" << format_double(c.gisp.edge_prob)
       << " gisp_alpha=" << format_double(c.gisp.alpha);
  }
  ss << " seed=" << c.seed;
  return ss.str();
}

void check(const GenConfig& c) {
  require(c.set_cover.rows >= 1 && c.set_cover.cols >= 1, "set covering counts must be >= 1");
  require(open_unit(c.set_cover.density), "set covering density must lie in (0,1)");
  require(c.auction.items >= 1 && c.auction.bids >= 1, "auction counts must be >= 1");
  require(c.gisp.graph_nodes >= 2, "gisp needs >= 2 nodes");
  require(open_unit(c.gisp.edge_prob) && open_unit(c.gisp.alpha), "gisp p and alpha must lie in (0,1)");
}

MilpInstance gen_set_covering(int rows, int cols, double density, std::uint64_t seed) {
  require(rows >= 1, "set covering rows must be >= 1");
  require(open_unit(density), "set covering density must lie in (0,1)");
  require(cols >= 2, "set covering needs >= 2 columns to cover every row twice");
  Rng rng(seed);

  std::vector<std::vector<char>> member(static_cast<std::size_t>(rows),
                                        std::vector<char>(static_cast<std::size_t>(cols), 0));
  for (auto& row : member) {
    for (auto& cell : row) cell = rng.bernoulli(density) ? 1 : 0;
  }
  // Repair: every row covered at least twice.
  for (auto& row : member) {
    int count = static_cast<int>(std::count(row.begin(), row.end(), 1));
    while (count < 2) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(0, cols - 1));
      if (!row[j]) {
        row[j] = 1;
        ++count;
      }
    }
  }
  // Repair: every column covers at least one row.
  for (int j = 0; j < cols; ++j) {
    bool used = false;
    for (const auto& row : member) used = used || row[static_cast<std::size_t>(j)];
    if (!used) {
      member[static_cast<std::size_t>(rng.uniform_int(0, rows - 1))][static_cast<std::size_t>(j)] = 1;
    }
  }

  MilpInstance inst = make_instance(
      "setcover_r" + std::to_string(rows) + "_c" + std::to_string(cols) + "_s" + std::to_string(seed), cols);
  for (int j = 0; j < cols; ++j) {
    make_binary(inst, j);
    inst.obj[static_cast<std::size_t>(j)] = static_cast<double>(rng.uniform_int(1, 100));
  }
  for (const auto& row : member) {
    std::vector<RowEntry> entries;
    for (int j = 0; j < cols; ++j) {
      if (row[static_cast<std::size_t>(j)]) entries.push_back({j, 1.0});
    }
    inst.add_ge_row(std::move(entries), 1.0);
  }
  return inst;
}

MilpInstance gen_comb_auction(int items, int bids, std::uint64_t seed) {
  require(items >= 1 && bids >= 1, "auction counts must be >= 1");
  constexpr double kAddProb = 0.65;
  constexpr double kSizeExponent = 0.2;
  Rng rng(seed);

  const auto ni = static_cast<std::size_t>(items);
  std::vector<double> value(ni);
  for (auto& v : value) v = static_cast<double>(rng.uniform_int(1, 100));
  std::vector<double> compat(ni * ni, 0.0);
  for (std::size_t a = 0; a < ni; ++a) {
    for (std::size_t b = a + 1; b < ni; ++b) {
      compat[a * ni + b] = compat[b * ni + a] = rng.uniform();
    }
  }

  std::vector<std::vector<int>> bundles(static_cast<std::size_t>(bids));
  std::vector<char> in_bundle(ni, 0);
  for (auto& bundle : bundles) {
    std::fill(in_bundle.begin(), in_bundle.end(), 0);
    int current = static_cast<int>(rng.uniform_int(0, items - 1));
    bundle.push_back(current);
    in_bundle[static_cast<std::size_t>(current)] = 1;
    while (static_cast<int>(bundle.size()) < items && rng.bernoulli(kAddProb)) {
      double total = 0.0;
      for (std::size_t k = 0; k < ni; ++k) {
        if (!in_bundle[k]) total += compat[static_cast<std::size_t>(current) * ni + k];
      }
      double pick = rng.uniform() * total;
      int next = -1;
      for (std::size_t k = 0; k < ni; ++k) {
        if (in_bundle[k]) continue;
        next = static_cast<int>(k);
        pick -= compat[static_cast<std::size_t>(current) * ni + k];
        if (pick < 0.0) break;
      }
      if (next < 0) break;
      bundle.push_back(next);
      in_bundle[static_cast<std::size_t>(next)] = 1;
      current = next;
    }
  }
  // Every item must appear in some bid so that each item row is nonempty.
  std::vector<char> covered(ni, 0);
  for (const auto& bundle : bundles) {
    for (const int k : bundle) covered[static_cast<std::size_t>(k)] = 1;
  }
  for (std::size_t k = 0; k < ni; ++k) {
    if (!covered[k]) bundles[static_cast<std::size_t>(rng.uniform_int(0, bids - 1))].push_back(static_cast<int>(k));
  }

  MilpInstance inst = make_instance(
      "cauction_i" + std::to_string(items) + "_b" + std::to_string(bids) + "_s" + std::to_string(seed), bids);
  std::vector<std::vector<RowEntry>> item_rows(ni);
  for (int b = 0; b < bids; ++b) {
    auto& bundle = bundles[static_cast<std::size_t>(b)];
    std::sort(bundle.begin(), bundle.end());
    double common = 0.0;
    for (const int k : bundle) common += value[static_cast<std::size_t>(k)];
    const double scale = std::pow(static_cast<double>(bundle.size()), kSizeExponent);
    const double price = std::max(1.0, std::round(rng.uniform(0.5, 1.5) * common * scale));
    make_binary(inst, b);
    inst.obj[static_cast<std::size_t>(b)] = price;
    for (const int k : bundle) item_rows[static_cast<std::size_t>(k)].push_back({b, 1.0});
  }
  for (auto& row : item_rows) inst.add_le_row(std::move(row), 1.0);
  return negate_to_min(inst);
}

MilpInstance gen_gisp(int graph_nodes, double edge_prob, double alpha, std::uint64_t seed) {
  require(graph_nodes >= 2, "gisp needs >= 2 nodes");
  require(open_unit(edge_prob) && open_unit(alpha), "gisp p and alpha must lie in (0,1)");
  Rng rng(seed);

  struct Edge {
    int u, v;
    bool removable;
  };
  std::vector<Edge> edges;
  for (int u = 0; u < graph_nodes; ++u) {
    for (int v = u + 1; v < graph_nodes; ++v) {
      if (rng.bernoulli(edge_prob)) edges.push_back({u, v, rng.bernoulli(alpha)});
    }
  }
  std::vector<double> revenue(static_cast<std::size_t>(graph_nodes));
  for (auto& r : revenue) r = static_cast<double>(rng.uniform_int(1, 100));

  int removable = 0;
  for (const auto& e : edges) removable += e.removable ? 1 : 0;
  MilpInstance inst = make_instance("gisp_n" + std::to_string(graph_nodes) + "_s" + std::to_string(seed),
                                    graph_nodes + removable);
  for (int v = 0; v < graph_nodes; ++v) {
    make_binary(inst, v);
    inst.obj[static_cast<std::size_t>(v)] = revenue[static_cast<std::size_t>(v)];
  }
  int y = graph_nodes;
  for (const auto& e : edges) {
    if (e.removable) {
      make_binary(inst, y);
      inst.obj[static_cast<std::size_t>(y)] = -static_cast<double>(rng.uniform_int(1, 100));
      inst.add_le_row({{e.u, 1.0}, {e.v, 1.0}, {y, -1.0}}, 1.0);
      ++y;
    } else {
      inst.add_le_row({{e.u, 1.0}, {e.v, 1.0}}, 1.0);
    }
  }
  return negate_to_min(inst);
}

MilpInstance generate(const GenConfig& c) {
  switch (c.family) {
    case Family::SetCovering:
      return gen_set_covering(c.set_cover.rows, c.set_cover.cols, c.set_cover.density, c.seed);
    case Family::CombAuction:
      return gen_comb_auction(c.auction.items, c.auction.bids, c.seed);
    case Family::Gisp:
      return gen_gisp(c.gisp.graph_nodes, c.gisp.edge_prob, c.gisp.alpha, c.seed);
    case Family::Mixed:
      break;
  }
  throw ConfigError("generate() needs a pure family; use gen_mixed");
}

std::vector<GeneratedInstance> gen_mixed(int count, const std::vector<GenConfig>& configs,
                                         std::uint64_t seed) {
  require(count >= 0 && count % 3 == 0, "mixed count must be divisible by 3");
  require(configs.size() == 3, "mixed generation needs one config per family");
  const Family families[3] = {Family::SetCovering, Family::CombAuction, Family::Gisp};
  std::vector<GeneratedInstance> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int f = 0; f < 3; ++f) {
    for (int k = 0; k < count / 3; ++k) {
      GenConfig cfg = configs[static_cast<std::size_t>(f)];
      cfg.family = families[f];
      cfg.seed = derive_seed(seed, static_cast<std::uint64_t>(f * (count / 3) + k));
      out.push_back({families[f], generate(cfg), cfg.seed});
    }
  }
  Rng rng(derive_seed(seed, 0xFFFFFFFFULL));
  rng.shuffle(std::span<GeneratedInstance>(out));
  return out;
}

}  // namespace objval
