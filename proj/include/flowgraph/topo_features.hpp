#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "flowgraph/graph_build.hpp"
#include "flowgraph/matrix.hpp"
#include "flowgraph/random.hpp"

namespace flowgraph {

/// Induced subgraph on a node and its in/out neighbors. Self-loops never
/// make a node its own neighbor, but a self-loop on a member is an edge.
struct Egonet {
  struct Edge {
    NodeId from;
    NodeId to;
    double weight;
  };
  NodeId center = 0;
  /// center first, then neighbors in adjacency order.
  std::vector<NodeId> members;
  std::vector<Edge> edges;
};

Egonet extract_egonet(const TrafficGraph& g, NodeId center);

enum class WalkTermination { returned_to_start, length_reached, dead_end };

struct WalkStep {
  NodeId from;
  NodeId to;
  double weight;
};

struct RandomWalk {
  NodeId start = 0;
  std::vector<WalkStep> steps;
  WalkTermination terminated_by = WalkTermination::dead_end;
};

/// Uniform out-neighbor walk of at most `length` edges from `start`; stops
/// early on returning to `start` or at a node without out-neighbors.
RandomWalk sample_walk(const TrafficGraph& g, NodeId start, std::size_t length, Rng& rng);
/// Same walk as the first one node_features draws for `start` under `seed`.
RandomWalk sample_walk(const TrafficGraph& g, NodeId start, std::size_t length,
                       std::uint64_t seed);

enum class FeatureCatalog { egonet, random_walk };

std::string_view to_string(FeatureCatalog catalog);
/// Accepts "egonet" and "random_walk"; throws ConfigError otherwise.
FeatureCatalog parse_catalog(std::string_view id);

/// Each catalog has 16 base features, followed by their sign-preserving
/// log1p forms and their rank-normalized forms across nodes (48 in total).
/// A configured p keeps the first p of these.
inline constexpr std::size_t kBaseFeatureCount = 16;
inline constexpr std::size_t kMaxFeatureCount = 3 * kBaseFeatureCount;

std::vector<std::string> catalog_feature_names(FeatureCatalog catalog, std::size_t p);

struct FeatureOptions {
  FeatureCatalog catalog = FeatureCatalog::egonet;
  std::size_t p = 48;
  std::size_t walk_length = 10;
  std::size_t walks_per_node = 8;
  std::uint64_t seed = 0;
};

/// Z in R^{p x n}: column i is the embedding of node i.
class NodeFeatureMatrix {
 public:
  NodeFeatureMatrix() = default;
  NodeFeatureMatrix(Matrix values, std::vector<std::string> names, FeatureCatalog mode);

  std::size_t p() const noexcept { return values_.rows(); }
  std::size_t n() const noexcept { return values_.cols(); }
  const Matrix& values() const noexcept { return values_; }
  std::span<const double> column(NodeId i) const { return values_.col(i); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  FeatureCatalog mode() const noexcept { return mode_; }

 private:
  Matrix values_;
  std::vector<std::string> names_;
  FeatureCatalog mode_ = FeatureCatalog::egonet;
};

std::vector<double> egonet_base_features(const Egonet& ego);
/// Per-walk base features; node_features averages these over walks.
std::vector<double> walk_base_features(const TrafficGraph& g, const RandomWalk& walk);

NodeFeatureMatrix node_features(const TrafficGraph& g, const FeatureOptions& options);

/// Stacks per-node vectors (NodeId order) into a p x n matrix.
NodeFeatureMatrix stack_features(const std::vector<std::vector<double>>& per_node,
                                 std::vector<std::string> names,
                                 FeatureCatalog mode = FeatureCatalog::egonet);

/// Header "endpoint,<names...>", one row per node.
void write_node_features(std::ostream& out, const NodeFeatureMatrix& z, const TrafficGraph& g);

}  // namespace flowgraph
