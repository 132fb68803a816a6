#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "flowgraph/flow_ingest.hpp"
#include "flowgraph/graph_build.hpp"
#include "flowgraph/matrix.hpp"
#include "flowgraph/topo_features.hpp"

namespace flowgraph {

/// standard: plain flow features; graph: node embeddings only;
/// mixed: flow features followed by source and destination embeddings.
enum class Regime { standard, graph, mixed };

std::string_view to_string(Regime regime);
Regime parse_regime(std::string_view name);

struct Provenance {
  std::string schema_name;
  std::string weight_column;
  std::string catalog;
  std::size_t p = 0;
  std::size_t m = 0;
};

/// Detector-ready samples. For flow regimes columns are flows and
/// `column_ids` hold record indices; for the graph regime columns are nodes
/// and `column_ids` hold node ids.
struct ExpandedDataset {
  Regime regime = Regime::standard;
  Matrix values;
  std::vector<std::string> row_names;
  std::optional<std::vector<bool>> labels;
  /// Attack category per column (flow regimes only; empty for graph).
  std::vector<std::optional<std::string>> categories;
  std::vector<std::size_t> column_ids;
  /// Record index at which each column's sample first exists in the stream.
  std::vector<std::size_t> first_seen;
  Provenance provenance;

  std::size_t outlier_count() const;
};

/// Column t = [x_t; z_src(t); z_dst(t)].
ExpandedDataset expand(const FlowDataset& ds, const NodeFeatureMatrix& z, const TrafficGraph& g);

/// Builds the samples of one regime. graph and mixed require z and g.
ExpandedDataset as_regime(const FlowDataset& ds, const NodeFeatureMatrix* z,
                          const TrafficGraph* g, Regime regime,
                          NodeLabelRule rule = NodeLabelRule::source);

/// Per-row zero-mean / unit-variance scaling. Rows with zero variance are
/// only centered.
class Standardizer {
 public:
  Standardizer() = default;
  static Standardizer fit(const Matrix& x);

  Matrix transform(const Matrix& x) const;
  std::size_t dimension() const noexcept { return means_.size(); }
  const std::vector<double>& means() const noexcept { return means_; }
  const std::vector<double>& scales() const noexcept { return scales_; }

  nlohmann::json to_json() const;
  static Standardizer from_json(const nlohmann::json& j);

 private:
  std::vector<double> means_;
  std::vector<double> scales_;
};

/// Writes a mixed/standard dataset with src/dst endpoint columns so it can
/// be reloaded as a flow table. Embedding columns are named
/// z_src_<feature> and z_dst_<feature>.
void write_expanded(std::ostream& out, const ExpandedDataset& data, const FlowDataset& ds);

}  // namespace flowgraph
