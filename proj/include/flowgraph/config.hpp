#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowgraph/eval_harness.hpp"
#include "flowgraph/feature_expand.hpp"
#include "flowgraph/flow_ingest.hpp"
#include "flowgraph/graph_build.hpp"
#include "flowgraph/topo_features.hpp"

namespace flowgraph {

/// Everything a pipeline run needs, resolved from one JSON config file.
struct PipelineConfig {
  std::filesystem::path dataset_path;
  DatasetSchema schema;

  std::string weight_column;
  NodeLabelRule node_label_rule = NodeLabelRule::source;

  FeatureCatalog catalog = FeatureCatalog::egonet;
  std::size_t p = 48;
  std::size_t walk_length = 10;
  std::size_t walks_per_node = 8;

  std::vector<Regime> regimes = {Regime::standard, Regime::graph, Regime::mixed};

  /// Tuning head, then the training block that follows it; test fractions
  /// are heads of the remainder.
  double tune_fraction = 0.01;
  double train_fraction = 0.1;
  std::vector<double> test_fractions = {0.1, 0.3, 0.5, 0.7, 1.0};

  /// Candidate lists in ocsvm, lof, iforest order (selected detectors only).
  std::vector<std::vector<DetectorParams>> grids;
  EnsembleSettings ensemble;

  std::uint64_t seed = 0;
  unsigned workers = 0;
  std::filesystem::path output_dir;

  /// Normalized config with defaults filled in.
  nlohmann::json resolved;
};

/// Default candidate grid of one detector.
std::vector<DetectorParams> default_grid(DetectorKind kind);

/// Relative paths resolve against `base_dir`. Every problem found is listed
/// in a single ConfigError.
PipelineConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

/// Reads a config file (comments allowed) and applies "a.b.c=value"
/// overrides; values parse as JSON when possible, else as strings.
PipelineConfig load_config(const std::filesystem::path& path,
                           const std::vector<std::string>& overrides = {});

void apply_override(nlohmann::json& j, const std::string& assignment);

/// Hash over everything that affects fitted models. Output location,
/// worker count and test fractions are excluded.
std::string config_hash(const PipelineConfig& config);

}  // namespace flowgraph
