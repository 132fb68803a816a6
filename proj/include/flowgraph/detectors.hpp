#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "flowgraph/matrix.hpp"

namespace flowgraph {

enum class DetectorKind { iforest, lof, ocsvm };

std::string_view to_string(DetectorKind kind);
DetectorKind parse_detector_kind(std::string_view name);

/// Hyperparameters for one detector. Only the fields of `kind` are used.
struct DetectorParams {
  DetectorKind kind = DetectorKind::iforest;
  /// Assumed anomaly fraction; sets the threshold for IForest and LOF.
  double contamination = 0.1;

  // Isolation forest
  std::size_t n_trees = 100;
  std::size_t subsample = 256;
  std::uint64_t seed = 0;

  // Local outlier factor
  std::size_t k = 20;

  // One-class SVM; gamma unset means 1/d.
  double nu = 0.1;
  std::optional<double> gamma;
  double tolerance = 1e-4;
  std::size_t max_iterations = 10'000'000;

  void validate() const;
  /// Compact human-readable form, e.g. "nu=0.1 gamma=1/d".
  std::string describe() const;

  /// Compares `kind` and the fields that kind uses.
  friend bool operator==(const DetectorParams& a, const DetectorParams& b);
};

nlohmann::json params_to_json(const DetectorParams& p);
DetectorParams params_from_json(const nlohmann::json& j);

/// Fitted detector. Scores are oriented so that higher means more
/// anomalous, and predict(x) flags score(x) > threshold(). Immutable after
/// construction, so a model can be scored from several threads at once.
class DetectorModel {
 public:
  virtual ~DetectorModel() = default;

  DetectorKind kind() const noexcept { return params_.kind; }
  const DetectorParams& params() const noexcept { return params_; }
  std::size_t dimension() const noexcept { return dimension_; }
  double threshold() const noexcept { return threshold_; }
  /// Scores of the training samples, computed at fit time.
  const std::vector<double>& training_scores() const noexcept { return training_scores_; }

  /// One score per column of x (d x Q).
  std::vector<double> score(const Matrix& x) const;
  std::vector<bool> predict(const Matrix& x) const;
  std::vector<bool> predict(const Matrix& x, double threshold) const;

  nlohmann::json to_json() const;

 protected:
  DetectorModel(DetectorParams params, std::size_t dimension)
      : params_(std::move(params)), dimension_(dimension) {}

  /// Stores training scores and sets the threshold to their (1-c) quantile.
  void set_training_scores(std::vector<double> scores, bool quantile_threshold = true);
  void set_threshold(double threshold) { threshold_ = threshold; }

  virtual std::vector<double> score_columns(const Matrix& x) const = 0;
  virtual nlohmann::json state_to_json() const = 0;

 private:
  DetectorParams params_;
  std::size_t dimension_;
  double threshold_ = 0.0;
  std::vector<double> training_scores_;

  friend std::unique_ptr<DetectorModel> detector_from_json(const nlohmann::json& j);
};

/// Linear-interpolation quantile (q in [0,1]) of an unsorted sample.
double quantile(std::vector<double> values, double q);

/// Dispatches on params.kind.
std::unique_ptr<DetectorModel> fit_detector(const Matrix& xtrain, const DetectorParams& params);

std::unique_ptr<DetectorModel> detector_from_json(const nlohmann::json& j);
void save_detector(const std::filesystem::path& path, const DetectorModel& model);
std::unique_ptr<DetectorModel> load_detector(const std::filesystem::path& path);

/// JSON has no infinities; thresholds may be +/-inf, so they go through these.
nlohmann::json encode_real(double value);
double decode_real(const nlohmann::json& j);

}  // namespace flowgraph
