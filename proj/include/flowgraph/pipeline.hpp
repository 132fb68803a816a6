#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "flowgraph/config.hpp"
#include "flowgraph/eval_harness.hpp"
#include "flowgraph/feature_expand.hpp"
#include "flowgraph/flow_ingest.hpp"

namespace flowgraph {

/// Record ranges of one run: tuning head, training block, the held-out
/// block right after training (same size as training, clipped), and the
/// whole remainder used by the rolling test.
struct SplitPlan {
  IndexRange tune;
  IndexRange train;
  IndexRange next_block;
  IndexRange test;
};

SplitPlan plan_splits(std::size_t records, const PipelineConfig& config);

/// Graph, node features and per-regime samples built from one block only.
/// `stage` names the seed stream of the walk sampler.
std::map<Regime, ExpandedDataset> build_regimes(const FlowDataset& block,
                                                const PipelineConfig& config,
                                                std::string_view stage);

std::map<Regime, Standardizer> fit_standardizers(const std::map<Regime, ExpandedDataset>& data);
void apply_standardizers(std::map<Regime, ExpandedDataset>& data,
                         const std::map<Regime, Standardizer>& scalers);

struct TrainedPipeline {
  std::map<Regime, RegimeModels> models;
  std::map<Regime, Standardizer> scalers;
  EvalReport report;
};

/// In-memory stages; the commands below wrap them with file I/O.
GridResult run_tune(const PipelineConfig& config, const FlowDataset& all);
TrainedPipeline run_train(const PipelineConfig& config, const FlowDataset& all,
                          const std::map<Regime, std::vector<DetectorParams>>& params);
EvalReport run_predict(const PipelineConfig& config, const FlowDataset& all,
                       const std::map<Regime, RegimeModels>& models,
                       const std::map<Regime, Standardizer>& scalers);

nlohmann::json best_params_to_json(const std::map<Regime, std::vector<DetectorParams>>& best,
                                   const std::string& config_hash);
std::map<Regime, std::vector<DetectorParams>> best_params_from_json(const nlohmann::json& j);

/// Commands write under config.output_dir and stamp every file with the
/// config hash.
void cmd_featurize(const PipelineConfig& config);
EvalReport cmd_tune(const PipelineConfig& config);
EvalReport cmd_train(const PipelineConfig& config,
                     const std::optional<std::filesystem::path>& params_file = std::nullopt);
/// Refuses models whose manifest carries a different config hash.
EvalReport cmd_predict(const PipelineConfig& config,
                       const std::optional<std::filesystem::path>& models_dir = std::nullopt);
/// Renders a machine-readable report back into its text tables.
std::string cmd_report(const std::filesystem::path& report_json);

}  // namespace flowgraph
