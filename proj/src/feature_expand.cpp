#include "flowgraph/feature_expand.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "flowgraph/error.hpp"
#include "flowgraph/text_io.hpp"

namespace flowgraph {
namespace {

Provenance provenance_of(const FlowDataset& ds, const NodeFeatureMatrix* z) {
  Provenance p;
  p.schema_name = ds.schema().name;
  p.weight_column = ds.schema().weight_column;
  p.m = ds.m();
  if (z) {
    p.catalog = std::string(to_string(z->mode()));
    p.p = z->p();
  }
  return p;
}

void attach_flow_metadata(ExpandedDataset& out, const FlowDataset& ds) {
  if (ds.has_labels()) out.labels = ds.labels();
  out.categories.reserve(ds.size());
  out.column_ids.reserve(ds.size());
  for (const auto& r : ds.records()) {
    out.categories.push_back(r.attack_category);
    out.column_ids.push_back(r.index);
  }
  out.first_seen = out.column_ids;
}

}  // namespace

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::standard: return "standard";
    case Regime::graph: return "graph";
    case Regime::mixed: return "mixed";
  }
  return "?";
}

Regime parse_regime(std::string_view name) {
  if (name == "standard") return Regime::standard;
  if (name == "graph") return Regime::graph;
  if (name == "mixed") return Regime::mixed;
  throw ConfigError("unknown regime '" + std::string(name) +
                    "' (expected standard, graph or mixed)");
}

std::size_t ExpandedDataset::outlier_count() const {
  if (!labels) return 0;
  return static_cast<std::size_t>(std::count(labels->begin(), labels->end(), true));
}

ExpandedDataset expand(const FlowDataset& ds, const NodeFeatureMatrix& z, const TrafficGraph& g) {
  if (z.n() != g.node_count()) {
    throw ConsistencyError("node feature matrix has " + std::to_string(z.n()) +
                           " columns but the graph has " + std::to_string(g.node_count()) +
                           " nodes");
  }
  const std::size_t m = ds.m();
  const std::size_t p = z.p();

  ExpandedDataset out;
  out.regime = Regime::mixed;
  out.provenance = provenance_of(ds, &z);
  out.values = Matrix(m + 2 * p, ds.size());
  out.row_names = ds.schema().feature_columns;
  for (const auto& name : z.names()) out.row_names.push_back("z_src_" + name);
  for (const auto& name : z.names()) out.row_names.push_back("z_dst_" + name);

  for (std::size_t t = 0; t < ds.size(); ++t) {
    const auto& r = ds[t];
    auto column = out.values.col(t);
    const auto zs = z.column(g.node_of(r.src));
    const auto zd = z.column(g.node_of(r.dst));
    auto it = std::copy(r.features.begin(), r.features.end(), column.begin());
    it = std::copy(zs.begin(), zs.end(), it);
    std::copy(zd.begin(), zd.end(), it);
  }
  attach_flow_metadata(out, ds);
  return out;
}

ExpandedDataset as_regime(const FlowDataset& ds, const NodeFeatureMatrix* z,
                          const TrafficGraph* g, Regime regime, NodeLabelRule rule) {
  switch (regime) {
    case Regime::standard: {
      ExpandedDataset out;
      out.regime = Regime::standard;
      out.provenance = provenance_of(ds, z);
      out.values = ds.feature_matrix();
      out.row_names = ds.schema().feature_columns;
      attach_flow_metadata(out, ds);
      return out;
    }
    case Regime::graph: {
      if (!z || !g) throw ArgumentError("graph regime needs node features and the graph");
      if (z->n() != g->node_count()) {
        throw ConsistencyError("node feature matrix does not match the graph");
      }
      ExpandedDataset out;
      out.regime = Regime::graph;
      out.provenance = provenance_of(ds, z);
      out.values = z->values();
      out.row_names = z->names();
      if (ds.has_labels()) out.labels = node_labels(ds, *g, rule);
      out.column_ids.resize(g->node_count());
      for (std::size_t i = 0; i < out.column_ids.size(); ++i) out.column_ids[i] = i;
      // first_seen is relative to the dataset; translate to record indices.
      out.first_seen.resize(g->node_count());
      for (std::size_t i = 0; i < g->node_count(); ++i) {
        out.first_seen[i] = ds[g->first_seen()[i]].index;
      }
      return out;
    }
    case Regime::mixed: {
      if (!z || !g) throw ArgumentError("mixed regime needs node features and the graph");
      return expand(ds, *z, *g);
    }
  }
  throw ArgumentError("unknown regime");
}

Standardizer Standardizer::fit(const Matrix& x) {
  Standardizer s;
  const std::size_t d = x.rows();
  const std::size_t n = x.cols();
  s.means_.assign(d, 0.0);
  s.scales_.assign(d, 1.0);
  if (n == 0) return s;
  for (std::size_t c = 0; c < n; ++c) {
    auto col = x.col(c);
    for (std::size_t r = 0; r < d; ++r) s.means_[r] += col[r];
  }
  for (double& mu : s.means_) mu /= static_cast<double>(n);
  std::vector<double> var(d, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    auto col = x.col(c);
    for (std::size_t r = 0; r < d; ++r) {
      const double diff = col[r] - s.means_[r];
      var[r] += diff * diff;
    }
  }
  for (std::size_t r = 0; r < d; ++r) {
    const double sd = std::sqrt(var[r] / static_cast<double>(n));
    s.scales_[r] = sd > 1e-12 * std::max(1.0, std::abs(s.means_[r])) ? sd : 1.0;
  }
  return s;
}

Matrix Standardizer::transform(const Matrix& x) const {
  if (x.rows() != means_.size()) {
    throw ArgumentError("standardizer fitted on " + std::to_string(means_.size()) +
                        " rows, got " + std::to_string(x.rows()));
  }
  Matrix out(x.rows(), x.cols());
  for (std::size_t c = 0; c < x.cols(); ++c) {
    auto src = x.col(c);
    auto dst = out.col(c);
    for (std::size_t r = 0; r < x.rows(); ++r) dst[r] = (src[r] - means_[r]) / scales_[r];
  }
  return out;
}

nlohmann::json Standardizer::to_json() const {
  return {{"means", means_}, {"scales", scales_}};
}

Standardizer Standardizer::from_json(const nlohmann::json& j) {
  Standardizer s;
  s.means_ = j.at("means").get<std::vector<double>>();
  s.scales_ = j.at("scales").get<std::vector<double>>();
  if (s.means_.size() != s.scales_.size()) throw DataError("malformed standardizer");
  return s;
}

void write_expanded(std::ostream& out, const ExpandedDataset& data, const FlowDataset& ds) {
  if (data.regime == Regime::graph) {
    throw ArgumentError("write_expanded handles flow regimes; use write_node_features");
  }
  if (data.values.cols() != ds.size()) {
    throw ConsistencyError("expanded dataset and flow dataset differ in length");
  }
  DatasetSchema schema = ds.schema();
  schema.feature_columns = data.row_names;
  schema.column_names.clear();
  std::vector<FlowRecord> records(ds.records().begin(), ds.records().end());
  for (std::size_t t = 0; t < records.size(); ++t) {
    auto col = data.values.col(t);
    records[t].features.assign(col.begin(), col.end());
  }
  write_dataset(out, FlowDataset(std::move(schema), std::move(records)));
}

}  // namespace flowgraph
