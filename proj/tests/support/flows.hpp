#pragma once

#include <string>
#include <vector>

#include "flowgraph/flow_ingest.hpp"
#include "flowgraph/random.hpp"
#include "oracles/graph_oracle.hpp"

namespace flowgraph::testing {

/// Unlabeled flows with a single feature "w" that doubles as the weight.
inline FlowDataset flows_of(const std::vector<oracle::RawFlow>& flows) {
  DatasetSchema s;
  s.name = "raw";
  s.source_column = "src";
  s.destination_column = "dst";
  s.feature_columns = {"w"};
  s.weight_column = "w";
  std::vector<FlowRecord> records;
  for (std::size_t t = 0; t < flows.size(); ++t) {
    FlowRecord r;
    r.index = t;
    r.src = flows[t].src;
    r.dst = flows[t].dst;
    r.features = {flows[t].weight};
    records.push_back(std::move(r));
  }
  return FlowDataset(s, std::move(records));
}

/// Up to `max_flows` flows among up to `max_nodes` endpoints; weights are
/// small integers or arbitrary reals, self-loops included.
inline std::vector<oracle::RawFlow> random_flows(Rng& rng, std::size_t max_flows,
                                                 std::size_t max_nodes) {
  const std::size_t nodes = 1 + uniform_index(rng, max_nodes);
  const std::size_t count = 1 + uniform_index(rng, max_flows);
  const bool integral = uniform_index(rng, 2) == 0;
  std::vector<oracle::RawFlow> flows;
  for (std::size_t t = 0; t < count; ++t) {
    oracle::RawFlow f;
    f.src = "h" + std::to_string(uniform_index(rng, nodes));
    f.dst = "h" + std::to_string(uniform_index(rng, nodes));
    f.weight = integral ? static_cast<double>(uniform_index(rng, 50))
                        : uniform_real(rng, 0.0, 1000.0);
    flows.push_back(f);
  }
  return flows;
}

}  // namespace flowgraph::testing
