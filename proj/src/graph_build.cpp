#include "flowgraph/graph_build.hpp"

#include <cmath>
#include <ostream>

#include "flowgraph/error.hpp"
#include "flowgraph/text_io.hpp"

namespace flowgraph {

std::optional<NodeId> TrafficGraph::find(std::string_view endpoint) const {
  auto it = ids_.find(std::string(endpoint));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

NodeId TrafficGraph::node_of(std::string_view endpoint) const {
  if (auto id = find(endpoint)) return *id;
  throw ConsistencyError("endpoint '" + std::string(endpoint) + "' is not a node of the graph");
}

std::optional<double> TrafficGraph::weight(NodeId from, NodeId to) const {
  for (const auto& e : out_adj_.at(from)) {
    if (e.neighbor == to) return e.weight;
  }
  return std::nullopt;
}

NodeId GraphBuilder::intern(std::string_view endpoint) {
  auto [it, inserted] =
      graph_.ids_.try_emplace(std::string(endpoint), static_cast<NodeId>(graph_.endpoints_.size()));
  if (inserted) {
    graph_.endpoints_.emplace_back(endpoint);
    graph_.first_seen_.push_back(flows_);
  }
  return it->second;
}

void GraphBuilder::add_flow(std::string_view src, std::string_view dst, double weight) {
  if (!std::isfinite(weight)) {
    throw DataError("non-finite weight on flow " + std::to_string(flows_) + " (" + std::string(src) +
                    " -> " + std::string(dst) + ")");
  }
  const NodeId from = intern(src);
  const NodeId to = intern(dst);
  const std::uint64_t key = (static_cast<std::uint64_t>(from) << 32) | to;
  auto [it, inserted] = edge_slot_.try_emplace(key, edges_.size());
  if (inserted) {
    edges_.push_back({from, to, weight});
  } else {
    edges_[it->second].weight += weight;
  }
  ++flows_;
}

TrafficGraph GraphBuilder::finish() && {
  const std::size_t n = graph_.endpoints_.size();
  graph_.out_adj_.assign(n, {});
  graph_.in_adj_.assign(n, {});
  for (const auto& e : edges_) {
    graph_.out_adj_[e.from].push_back({e.to, e.weight});
    graph_.in_adj_[e.to].push_back({e.from, e.weight});
    if (e.weight < 0) {
      graph_.warnings_.push_back("negative aggregate weight " + format_double(e.weight) +
                                 " on edge " + graph_.endpoints_[e.from] + " -> " +
                                 graph_.endpoints_[e.to]);
    } else if (!std::isfinite(e.weight)) {
      throw DataError("non-finite aggregate weight on edge " + graph_.endpoints_[e.from] +
                      " -> " + graph_.endpoints_[e.to]);
    }
  }
  graph_.edge_count_ = edges_.size();
  edges_.clear();
  edge_slot_.clear();
  return std::move(graph_);
}

TrafficGraph build_graph(const FlowDataset& ds, std::string_view weight_column) {
  const std::size_t w = ds.schema().feature_index(weight_column);
  GraphBuilder builder;
  for (const auto& r : ds.records()) builder.add_flow(r.src, r.dst, r.features[w]);
  return std::move(builder).finish();
}

std::vector<bool> node_labels(const FlowDataset& ds, const TrafficGraph& g, NodeLabelRule rule) {
  if (!ds.has_labels()) throw DataError("node labels need a labeled dataset");
  std::vector<bool> out(g.node_count(), false);
  for (const auto& r : ds.records()) {
    if (!r.label.value_or(false)) continue;
    out[g.node_of(r.src)] = true;
    if (rule == NodeLabelRule::source_or_destination) out[g.node_of(r.dst)] = true;
  }
  return out;
}

void write_edge_list(std::ostream& out, const TrafficGraph& g) {
  for (NodeId i = 0; i < g.node_count(); ++i) {
    for (const auto& e : g.out_edges(i)) {
      out << g.endpoint_of(i) << '\t' << g.endpoint_of(e.neighbor) << '\t'
          << format_double(e.weight) << '\n';
    }
  }
}

}  // namespace flowgraph
