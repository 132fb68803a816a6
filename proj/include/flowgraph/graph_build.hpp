#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "flowgraph/flow_ingest.hpp"

namespace flowgraph {

using NodeId = std::uint32_t;

struct WeightedEdge {
  NodeId neighbor;
  double weight;

  friend bool operator==(const WeightedEdge&, const WeightedEdge&) = default;
};

/// Directed weighted graph over traffic endpoints. Repeated flows between
/// the same ordered pair are already summed into a single edge. Node ids are
/// dense and assigned in order of first appearance.
class TrafficGraph {
 public:
  std::size_t node_count() const noexcept { return endpoints_.size(); }
  std::size_t edge_count() const noexcept { return edge_count_; }

  std::optional<NodeId> find(std::string_view endpoint) const;
  /// Throws ConsistencyError for unknown endpoints.
  NodeId node_of(std::string_view endpoint) const;
  const std::string& endpoint_of(NodeId id) const { return endpoints_.at(id); }
  const std::vector<std::string>& endpoints() const noexcept { return endpoints_; }

  std::span<const WeightedEdge> out_edges(NodeId id) const { return out_adj_.at(id); }
  std::span<const WeightedEdge> in_edges(NodeId id) const { return in_adj_.at(id); }
  std::optional<double> weight(NodeId from, NodeId to) const;

  /// Flow index at which each node first appeared (as src or dst).
  const std::vector<std::size_t>& first_seen() const noexcept { return first_seen_; }
  /// Non-fatal findings from the build, e.g. negative aggregate weights.
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

 private:
  friend class GraphBuilder;

  std::vector<std::string> endpoints_;
  std::unordered_map<std::string, NodeId> ids_;
  std::vector<std::vector<WeightedEdge>> out_adj_;
  std::vector<std::vector<WeightedEdge>> in_adj_;
  std::vector<std::size_t> first_seen_;
  std::size_t edge_count_ = 0;
  std::vector<std::string> warnings_;
};

/// Incremental construction: add flows, then finish() once.
class GraphBuilder {
 public:
  void add_flow(std::string_view src, std::string_view dst, double weight);
  TrafficGraph finish() &&;

 private:
  NodeId intern(std::string_view endpoint);

  TrafficGraph graph_;
  struct PendingEdge {
    NodeId from;
    NodeId to;
    double weight;
  };
  std::vector<PendingEdge> edges_;
  std::unordered_map<std::uint64_t, std::size_t> edge_slot_;
  std::size_t flows_ = 0;
};

/// w_ij = sum over flows i->j of the weight column.
TrafficGraph build_graph(const FlowDataset& ds, std::string_view weight_column);

enum class NodeLabelRule { source, source_or_destination };

/// Evaluation-only node truth: a node is anomalous when it sends at least
/// one attack flow (optionally also when it receives one).
std::vector<bool> node_labels(const FlowDataset& ds, const TrafficGraph& g,
                              NodeLabelRule rule = NodeLabelRule::source);

/// "src<TAB>dst<TAB>weight" per edge, ordered by source id then first appearance.
void write_edge_list(std::ostream& out, const TrafficGraph& g);

}  // namespace flowgraph
