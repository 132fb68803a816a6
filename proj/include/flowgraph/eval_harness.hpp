#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "flowgraph/detectors.hpp"
#include "flowgraph/ensemble.hpp"
#include "flowgraph/feature_expand.hpp"

namespace flowgraph {

struct Confusion {
  std::size_t tp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;

  friend bool operator==(const Confusion&, const Confusion&) = default;
};

Confusion confusion(const std::vector<bool>& pred, const std::vector<bool>& truth);

/// BA = (TPR + TNR) / 2. With single-class truth only one rate is defined;
/// `value` is then that rate, the other is NaN and `single_class` is set.
struct BalancedAccuracy {
  double value = 0.0;
  double tpr = 0.0;
  double tnr = 0.0;
  Confusion counts;
  bool single_class = false;
};

BalancedAccuracy balanced_accuracy(const std::vector<bool>& pred, const std::vector<bool>& truth);

/// Report column names: "ocsvm", "lof", "iforest", "ensemble" (majority
/// vote) and "ensemble_average".
inline constexpr const char* kEnsembleMajority = "ensemble";
inline constexpr const char* kEnsembleAverage = "ensemble_average";

struct DataShape {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t outliers = 0;

  friend bool operator==(const DataShape&, const DataShape&) = default;
};

/// Half-open range of record indices consumed by a stage.
struct IndexRange {
  std::string stage;
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// True when ranges appear in stream order and are pairwise disjoint.
bool ranges_disjoint_and_ordered(const std::vector<IndexRange>& ranges);

struct CellResult {
  Regime regime = Regime::standard;
  std::string detector;
  BalancedAccuracy ba;
  double fit_seconds = 0.0;
  std::optional<DetectorParams> params;
  bool failed = false;
  std::string error;
};

struct CategoryCount {
  std::size_t detected = 0;
  std::size_t total = 0;

  friend bool operator==(const CategoryCount&, const CategoryCount&) = default;
};

using AttackBreakdown = std::map<std::string, CategoryCount>;

struct BreakdownEntry {
  Regime regime = Regime::standard;
  std::string detector;
  AttackBreakdown counts;
};

struct RollingPoint {
  Regime regime = Regime::standard;
  std::string detector;
  double fraction = 0.0;
  std::size_t samples = 0;
  Confusion counts;
  double tpr = 0.0;
  double tnr = 0.0;
  /// FP min-max scaled across all detectors and fractions of the regime.
  double scaled_fp = 0.0;
};

struct EvalReport {
  std::string stage;
  /// What the BA values were computed on.
  std::string evaluation;
  std::string config_hash;
  std::vector<IndexRange> ranges;
  std::map<Regime, DataShape> shapes;
  /// Best candidate per (regime, detector), plus ensembles.
  std::vector<CellResult> cells;
  /// Every grid candidate (tuning only).
  std::vector<CellResult> candidates;
  /// BA on the block that follows training, labeled separately.
  std::vector<CellResult> next_block;
  std::vector<BreakdownEntry> breakdowns;
  std::vector<RollingPoint> rolling;
  std::vector<std::string> warnings;
};

struct EnsembleSettings {
  double contamination = 0.1;
  TieBreak tie = TieBreak::normal;
  bool majority = true;
  bool average = true;
};

struct GridSpec {
  std::vector<Regime> regimes;
  /// Candidate lists, evaluated in this detector order.
  std::vector<std::vector<DetectorParams>> detectors;
  EnsembleSettings ensemble;
};

/// Fitted models of one regime.
struct RegimeModels {
  std::vector<std::shared_ptr<const DetectorModel>> detectors;
  std::optional<EnsembleModel> majority;
  std::optional<EnsembleModel> average;
};

struct GridResult {
  std::map<Regime, std::vector<DetectorParams>> best;
  std::map<Regime, RegimeModels> models;
  EvalReport report;
};

/// For each regime and detector, fits every candidate on the labeled
/// tuning data, scores that same data and keeps the highest BA (ties go to
/// the first-listed candidate). Regimes missing from `tune` are skipped.
GridResult grid_search(const std::map<Regime, ExpandedDataset>& tune, const GridSpec& grid);

struct TrainResult {
  std::map<Regime, RegimeModels> models;
  EvalReport report;
};

/// Fits each detector with fixed parameters plus both ensembles, then
/// scores the training block itself. Failed fits are reported per cell.
TrainResult train_and_report(const std::map<Regime, ExpandedDataset>& train,
                             const std::map<Regime, std::vector<DetectorParams>>& params,
                             const EnsembleSettings& ensemble);

/// Predictions of every detector and ensemble in `models` on `data`, keyed
/// by report column name, in report column order.
std::vector<std::pair<std::string, std::vector<bool>>> predict_all(const RegimeModels& models,
                                                                   const Matrix& x);

/// BA cells for every model of a regime on labeled data.
std::vector<CellResult> evaluate_models(Regime regime, const RegimeModels& models,
                                        const ExpandedDataset& data);

/// Per category: total positives and how many of them were flagged.
/// `column_ids` (optional) names records in errors.
AttackBreakdown attack_breakdown(const std::vector<bool>& pred, const std::vector<bool>& truth,
                                 const std::vector<std::optional<std::string>>& categories,
                                 const std::vector<std::size_t>& column_ids = {});


/// Scores the post-training block once per model and reports metrics on
/// nested head fractions of it. `test` holds, per regime, samples built
/// over the block [block_begin, block_begin + block_flows); a fraction f
/// covers the columns first seen within the first ceil(f * block_flows)
/// flows. Warnings are appended for clipped or empty fractions.
std::vector<RollingPoint> rolling_test(const std::map<Regime, RegimeModels>& models,
                                       const std::map<Regime, ExpandedDataset>& test,
                                       std::size_t block_begin, std::size_t block_flows,
                                       const std::vector<double>& fractions,
                                       std::vector<std::string>& warnings);

}  // namespace flowgraph
