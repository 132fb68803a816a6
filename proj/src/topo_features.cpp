#include "flowgraph/topo_features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <unordered_set>

#include "flowgraph/error.hpp"
#include "flowgraph/parallel.hpp"
#include "flowgraph/text_io.hpp"

namespace flowgraph {
namespace {

const std::vector<std::string> kEgonetBaseNames = {
    "egonet_node_count",    "out_links",          "in_links",
    "egonet_edge_count",    "center_out_weight",  "center_in_weight",
    "egonet_total_weight",  "egonet_mean_weight", "egonet_max_weight",
    "egonet_min_weight",    "reciprocal_pairs",   "center_degree_ratio",
    "neighbor_edge_count",  "neighbor_total_weight", "neighbor_mean_weight",
    "neighbor_max_weight"};

const std::vector<std::string> kWalkBaseNames = {
    "first_leg_weight", "bottleneck_weight",  "walk_length",       "total_walk_weight",
    "mean_step_weight", "distinct_nodes",     "returned_to_start", "max_step_weight",
    "last_leg_weight",  "dead_end",           "length_reached",    "step_weight_std",
    "first_leg_share",  "revisits",           "mean_out_degree",   "end_in_degree"};

/// Per-thread epoch stamps for O(1) membership tests without clearing.
class MembershipMarker {
 public:
  void reset(std::size_t n) {
    if (stamp_.size() < n) stamp_.resize(n, 0);
    ++epoch_;
  }
  void mark(NodeId i) { stamp_[i] = epoch_; }
  bool marked(NodeId i) const { return stamp_[i] == epoch_; }

 private:
  std::vector<std::uint64_t> stamp_;
  std::uint64_t epoch_ = 0;
};

thread_local MembershipMarker t_marker;

double signed_log1p(double x) { return std::copysign(std::log1p(std::abs(x)), x); }

std::size_t non_loop_out_degree(const TrafficGraph& g, NodeId i) {
  std::size_t d = 0;
  for (const auto& e : g.out_edges(i)) d += e.neighbor != i;
  return d;
}

/// Average ranks mapped to [0,1]; a single node sits at 0.5.
std::vector<double> rank_normalize(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<double> out(n, 0.5);
  if (n < 2) return out;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j);
    for (std::size_t k = i; k <= j; ++k) out[order[k]] = rank / static_cast<double>(n - 1);
    i = j + 1;
  }
  return out;
}

}  // namespace

Egonet extract_egonet(const TrafficGraph& g, NodeId center) {
  if (center >= g.node_count()) {
    throw ArgumentError("node id " + std::to_string(center) + " out of range (n=" +
                        std::to_string(g.node_count()) + ")");
  }
  auto& marker = t_marker;
  marker.reset(g.node_count());

  Egonet ego;
  ego.center = center;
  ego.members.push_back(center);
  marker.mark(center);
  for (auto adjacency : {g.out_edges(center), g.in_edges(center)}) {
    for (const auto& e : adjacency) {
      if (!marker.marked(e.neighbor)) {
        marker.mark(e.neighbor);
        ego.members.push_back(e.neighbor);
      }
    }
  }
  for (NodeId u : ego.members) {
    for (const auto& e : g.out_edges(u)) {
      if (marker.marked(e.neighbor)) ego.edges.push_back({u, e.neighbor, e.weight});
    }
  }
  return ego;
}

std::vector<double> egonet_base_features(const Egonet& ego) {
  std::vector<double> f(kBaseFeatureCount, 0.0);
  const NodeId c = ego.center;

  double out_links = 0, in_links = 0, out_w = 0, in_w = 0;
  double total = 0, max_w = 0, min_w = 0;
  double nn_count = 0, nn_total = 0, nn_max = 0;
  std::unordered_set<std::uint64_t> arcs;
  arcs.reserve(ego.edges.size() * 2);
  bool first = true, nn_first = true;
  for (const auto& e : ego.edges) {
    arcs.insert((static_cast<std::uint64_t>(e.from) << 32) | e.to);
    if (e.from == c) {
      out_w += e.weight;
      out_links += e.to != c;
    }
    if (e.to == c) {
      in_w += e.weight;
      in_links += e.from != c;
    }
    total += e.weight;
    max_w = first ? e.weight : std::max(max_w, e.weight);
    min_w = first ? e.weight : std::min(min_w, e.weight);
    first = false;
    if (e.from != c && e.to != c) {
      ++nn_count;
      nn_total += e.weight;
      nn_max = nn_first ? e.weight : std::max(nn_max, e.weight);
      nn_first = false;
    }
  }
  double reciprocal = 0;
  for (const auto& e : ego.edges) {
    if (e.from < e.to && arcs.contains((static_cast<std::uint64_t>(e.to) << 32) | e.from)) {
      ++reciprocal;
    }
  }
  const double edge_count = static_cast<double>(ego.edges.size());

  f[0] = static_cast<double>(ego.members.size());
  f[1] = out_links;
  f[2] = in_links;
  f[3] = edge_count;
  f[4] = out_w;
  f[5] = in_w;
  f[6] = total;
  f[7] = edge_count > 0 ? total / edge_count : 0.0;
  f[8] = max_w;
  f[9] = min_w;
  f[10] = reciprocal;
  f[11] = edge_count > 0 ? (out_links + in_links) / edge_count : 0.0;
  f[12] = nn_count;
  f[13] = nn_total;
  f[14] = nn_count > 0 ? nn_total / nn_count : 0.0;
  f[15] = nn_max;
  return f;
}

RandomWalk sample_walk(const TrafficGraph& g, NodeId start, std::size_t length, Rng& rng) {
  if (start >= g.node_count()) {
    throw ArgumentError("node id " + std::to_string(start) + " out of range (n=" +
                        std::to_string(g.node_count()) + ")");
  }
  if (length == 0) throw ArgumentError("walk length must be at least 1");

  RandomWalk walk;
  walk.start = start;
  NodeId current = start;
  for (;;) {
    const auto edges = g.out_edges(current);
    const std::size_t choices = non_loop_out_degree(g, current);
    if (choices == 0) {
      walk.terminated_by = WalkTermination::dead_end;
      break;
    }
    std::size_t pick = uniform_index(rng, choices);
    const WeightedEdge* chosen = nullptr;
    for (const auto& e : edges) {
      if (e.neighbor == current) continue;
      if (pick-- == 0) {
        chosen = &e;
        break;
      }
    }
    walk.steps.push_back({current, chosen->neighbor, chosen->weight});
    current = chosen->neighbor;
    if (current == start) {
      walk.terminated_by = WalkTermination::returned_to_start;
      break;
    }
    if (walk.steps.size() == length) {
      walk.terminated_by = WalkTermination::length_reached;
      break;
    }
  }
  return walk;
}

RandomWalk sample_walk(const TrafficGraph& g, NodeId start, std::size_t length,
                       std::uint64_t seed) {
  Rng rng(derive_seed(seed, start));
  return sample_walk(g, start, length, rng);
}

std::vector<double> walk_base_features(const TrafficGraph& g, const RandomWalk& walk) {
  std::vector<double> f(kBaseFeatureCount, 0.0);
  const auto& steps = walk.steps;
  const double length = static_cast<double>(steps.size());

  f[2] = length;
  f[6] = walk.terminated_by == WalkTermination::returned_to_start ? 1.0 : 0.0;
  f[9] = walk.terminated_by == WalkTermination::dead_end ? 1.0 : 0.0;
  f[10] = walk.terminated_by == WalkTermination::length_reached ? 1.0 : 0.0;

  std::unordered_set<NodeId> visited{walk.start};
  double revisits = 0;
  double out_degree_sum = 0;
  for (const auto& s : steps) {
    out_degree_sum += static_cast<double>(non_loop_out_degree(g, s.from));
    if (!visited.insert(s.to).second && s.to != walk.start) ++revisits;
  }
  f[5] = static_cast<double>(visited.size());
  f[13] = revisits;
  const NodeId end = steps.empty() ? walk.start : steps.back().to;
  f[15] = static_cast<double>(g.in_edges(end).size());

  if (steps.empty()) return f;  // weight features stay 0

  double total = 0, bottleneck = steps.front().weight, peak = steps.front().weight;
  for (const auto& s : steps) {
    total += s.weight;
    bottleneck = std::min(bottleneck, s.weight);
    peak = std::max(peak, s.weight);
  }
  const double mean = total / length;
  double var = 0;
  for (const auto& s : steps) var += (s.weight - mean) * (s.weight - mean);

  f[0] = steps.front().weight;
  f[1] = bottleneck;
  f[3] = total;
  f[4] = mean;
  f[7] = peak;
  f[8] = steps.back().weight;
  f[11] = std::sqrt(var / length);
  f[12] = total != 0.0 ? steps.front().weight / total : 0.0;
  f[14] = out_degree_sum / length;
  return f;
}

std::string_view to_string(FeatureCatalog catalog) {
  return catalog == FeatureCatalog::egonet ? "egonet" : "random_walk";
}

FeatureCatalog parse_catalog(std::string_view id) {
  if (id == "egonet") return FeatureCatalog::egonet;
  if (id == "random_walk") return FeatureCatalog::random_walk;
  throw ConfigError("unknown feature catalog '" + std::string(id) +
                    "' (expected egonet or random_walk)");
}

std::vector<std::string> catalog_feature_names(FeatureCatalog catalog, std::size_t p) {
  if (p > kMaxFeatureCount) {
    throw ConfigError("feature count p=" + std::to_string(p) + " exceeds the catalog size " +
                      std::to_string(kMaxFeatureCount));
  }
  const auto& base = catalog == FeatureCatalog::egonet ? kEgonetBaseNames : kWalkBaseNames;
  std::vector<std::string> names;
  for (const auto& b : base) names.push_back(b);
  for (const auto& b : base) names.push_back("log1p_" + b);
  for (const auto& b : base) names.push_back("rank_" + b);
  names.resize(p);
  return names;
}

NodeFeatureMatrix::NodeFeatureMatrix(Matrix values, std::vector<std::string> names,
                                     FeatureCatalog mode)
    : values_(std::move(values)), names_(std::move(names)), mode_(mode) {
  if (names_.size() != values_.rows()) {
    throw ArgumentError("feature matrix has " + std::to_string(values_.rows()) + " rows but " +
                        std::to_string(names_.size()) + " names");
  }
}

NodeFeatureMatrix stack_features(const std::vector<std::vector<double>>& per_node,
                                 std::vector<std::string> names, FeatureCatalog mode) {
  for (std::size_t i = 0; i < per_node.size(); ++i) {
    if (per_node[i].size() != names.size()) {
      throw ArgumentError("node " + std::to_string(i) + " has " +
                          std::to_string(per_node[i].size()) + " features, expected " +
                          std::to_string(names.size()));
    }
  }
  Matrix values(names.size(), per_node.size());
  for (std::size_t i = 0; i < per_node.size(); ++i) {
    std::copy(per_node[i].begin(), per_node[i].end(), values.col(i).begin());
  }
  return NodeFeatureMatrix(std::move(values), std::move(names), mode);
}

NodeFeatureMatrix node_features(const TrafficGraph& g, const FeatureOptions& options) {
  const std::size_t n = g.node_count();
  if (n == 0) throw ArgumentError("cannot extract node features from an empty graph");
  auto names = catalog_feature_names(options.catalog, options.p);
  if (options.catalog == FeatureCatalog::random_walk &&
      (options.walk_length == 0 || options.walks_per_node == 0)) {
    throw ConfigError("walk length and walks per node must be positive");
  }

  std::vector<std::vector<double>> base(n);
  parallel_for(n, [&](std::size_t i) {
    const auto node = static_cast<NodeId>(i);
    if (options.catalog == FeatureCatalog::egonet) {
      base[i] = egonet_base_features(extract_egonet(g, node));
      return;
    }
    Rng rng(derive_seed(options.seed, node));
    std::vector<double> mean(kBaseFeatureCount, 0.0);
    for (std::size_t w = 0; w < options.walks_per_node; ++w) {
      const auto f = walk_base_features(g, sample_walk(g, node, options.walk_length, rng));
      for (std::size_t k = 0; k < kBaseFeatureCount; ++k) mean[k] += f[k];
    }
    for (double& v : mean) v /= static_cast<double>(options.walks_per_node);
    base[i] = std::move(mean);
  });

  Matrix full(kMaxFeatureCount, n);
  std::vector<double> row(n);
  for (std::size_t k = 0; k < kBaseFeatureCount; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      row[i] = base[i][k];
      full(k, i) = row[i];
      full(kBaseFeatureCount + k, i) = signed_log1p(row[i]);
    }
    const auto ranks = rank_normalize(row);
    for (std::size_t i = 0; i < n; ++i) full(2 * kBaseFeatureCount + k, i) = ranks[i];
  }

  Matrix values(options.p, n);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(full.col(i).begin(), options.p, values.col(i).begin());
  }
  return NodeFeatureMatrix(std::move(values), std::move(names), options.catalog);
}

void write_node_features(std::ostream& out, const NodeFeatureMatrix& z, const TrafficGraph& g) {
  out << "endpoint";
  for (const auto& name : z.names()) out << ',' << quote_field(name, ',');
  out << '\n';
  for (NodeId i = 0; i < z.n(); ++i) {
    out << quote_field(g.endpoint_of(i), ',');
    for (double v : z.column(i)) out << ',' << format_double(v);
    out << '\n';
  }
}

}  // namespace flowgraph
