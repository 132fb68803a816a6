#include "flowgraph/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "flowgraph/error.hpp"
#include "flowgraph/iforest.hpp"
#include "flowgraph/lof.hpp"
#include "flowgraph/ocsvm.hpp"
#include "flowgraph/text_io.hpp"

namespace flowgraph {
namespace {

constexpr int kModelFormatVersion = 1;

}  // namespace

std::string_view to_string(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::iforest: return "iforest";
    case DetectorKind::lof: return "lof";
    case DetectorKind::ocsvm: return "ocsvm";
  }
  return "?";
}

DetectorKind parse_detector_kind(std::string_view name) {
  if (name == "iforest") return DetectorKind::iforest;
  if (name == "lof") return DetectorKind::lof;
  if (name == "ocsvm") return DetectorKind::ocsvm;
  throw ConfigError("unknown detector '" + std::string(name) + "' (expected iforest, lof or ocsvm)");
}

void DetectorParams::validate() const {
  auto fail = [&](const std::string& what) {
    throw ConfigError(std::string(to_string(kind)) + ": " + what);
  };
  if (!(contamination > 0.0 && contamination <= 0.5)) fail("contamination must be in (0, 0.5]");
  switch (kind) {
    case DetectorKind::iforest:
      if (n_trees == 0) fail("n_trees must be positive");
      if (subsample < 2) fail("subsample must be at least 2");
      break;
    case DetectorKind::lof:
      if (k == 0) fail("k must be positive");
      break;
    case DetectorKind::ocsvm:
      if (!(nu > 0.0 && nu <= 1.0)) fail("nu must be in (0, 1]");
      if (gamma && !(*gamma > 0.0 && std::isfinite(*gamma))) fail("gamma must be positive");
      if (!(tolerance > 0.0)) fail("tolerance must be positive");
      if (max_iterations == 0) fail("max_iterations must be positive");
      break;
  }
}

std::string DetectorParams::describe() const {
  switch (kind) {
    case DetectorKind::iforest:
      return "n_trees=" + std::to_string(n_trees) + " subsample=" + std::to_string(subsample) +
             " c=" + format_double(contamination);
    case DetectorKind::lof:
      return "k=" + std::to_string(k) + " c=" + format_double(contamination);
    case DetectorKind::ocsvm:
      return "nu=" + format_double(nu) + " gamma=" + (gamma ? format_double(*gamma) : "1/d");
  }
  return {};
}

bool operator==(const DetectorParams& a, const DetectorParams& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case DetectorKind::iforest:
      return a.contamination == b.contamination && a.n_trees == b.n_trees &&
             a.subsample == b.subsample && a.seed == b.seed;
    case DetectorKind::lof:
      return a.contamination == b.contamination && a.k == b.k;
    case DetectorKind::ocsvm:
      return a.nu == b.nu && a.gamma == b.gamma && a.tolerance == b.tolerance &&
             a.max_iterations == b.max_iterations;
  }
  return false;
}

nlohmann::json params_to_json(const DetectorParams& p) {
  nlohmann::json j;
  j["detector"] = to_string(p.kind);
  j["contamination"] = p.contamination;
  switch (p.kind) {
    case DetectorKind::iforest:
      j["n_trees"] = p.n_trees;
      j["subsample"] = p.subsample;
      j["seed"] = p.seed;
      break;
    case DetectorKind::lof:
      j["k"] = p.k;
      break;
    case DetectorKind::ocsvm:
      j["nu"] = p.nu;
      j["gamma"] = p.gamma ? nlohmann::json(*p.gamma) : nlohmann::json("1/d");
      j["tolerance"] = p.tolerance;
      j["max_iterations"] = p.max_iterations;
      break;
  }
  return j;
}

DetectorParams params_from_json(const nlohmann::json& j) {
  DetectorParams p;
  try {
    p.kind = parse_detector_kind(j.at("detector").get<std::string>());
    p.contamination = j.value("contamination", p.contamination);
    p.n_trees = j.value("n_trees", p.n_trees);
    p.subsample = j.value("subsample", p.subsample);
    p.seed = j.value("seed", p.seed);
    p.k = j.value("k", p.k);
    p.nu = j.value("nu", p.nu);
    if (j.contains("gamma") && !j["gamma"].is_string()) p.gamma = j["gamma"].get<double>();
    p.tolerance = j.value("tolerance", p.tolerance);
    p.max_iterations = j.value("max_iterations", p.max_iterations);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed detector parameters: ") + e.what());
  }
  return p;
}

std::vector<double> DetectorModel::score(const Matrix& x) const {
  if (x.cols() == 0) return {};
  if (x.rows() != dimension_) {
    throw ArgumentError(std::string(to_string(kind())) + " fitted on dimension " +
                        std::to_string(dimension_) + ", got " + std::to_string(x.rows()));
  }
  return score_columns(x);
}

std::vector<bool> DetectorModel::predict(const Matrix& x) const { return predict(x, threshold_); }

std::vector<bool> DetectorModel::predict(const Matrix& x, double threshold) const {
  const auto scores = score(x);
  std::vector<bool> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] > threshold;
  return out;
}

void DetectorModel::set_training_scores(std::vector<double> scores, bool quantile_threshold) {
  training_scores_ = std::move(scores);
  if (quantile_threshold) threshold_ = quantile(training_scores_, 1.0 - params_.contamination);
}

nlohmann::json DetectorModel::to_json() const {
  nlohmann::json j;
  j["format"] = "flowgraph-detector";
  j["format_version"] = kModelFormatVersion;
  j["params"] = params_to_json(params_);
  j["dimension"] = dimension_;
  j["threshold"] = encode_real(threshold_);
  j["training_scores"] = training_scores_;
  j["state"] = state_to_json();
  return j;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ArgumentError("quantile of an empty sample");
  q = std::clamp(q, 0.0, 1.0);
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0 || values[lo] == values[hi]) return values[lo];
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::unique_ptr<DetectorModel> fit_detector(const Matrix& xtrain, const DetectorParams& params) {
  switch (params.kind) {
    case DetectorKind::iforest: return IsolationForest::fit(xtrain, params);
    case DetectorKind::lof: return LocalOutlierFactor::fit(xtrain, params);
    case DetectorKind::ocsvm: return OneClassSvm::fit(xtrain, params);
  }
  throw ArgumentError("unknown detector kind");
}

std::unique_ptr<DetectorModel> detector_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", "") != "flowgraph-detector") throw DataError("not a detector model file");
    if (j.at("format_version").get<int>() != kModelFormatVersion) {
      throw DataError("unsupported detector model version");
    }
    const auto params = params_from_json(j.at("params"));
    const auto dimension = j.at("dimension").get<std::size_t>();
    std::unique_ptr<DetectorModel> model;
    switch (params.kind) {
      case DetectorKind::iforest:
        model = IsolationForest::from_state(params, dimension, j.at("state"));
        break;
      case DetectorKind::lof:
        model = LocalOutlierFactor::from_state(params, dimension, j.at("state"));
        break;
      case DetectorKind::ocsvm:
        model = OneClassSvm::from_state(params, dimension, j.at("state"));
        break;
    }
    model->training_scores_ = j.at("training_scores").get<std::vector<double>>();
    model->threshold_ = decode_real(j.at("threshold"));
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed detector model: ") + e.what());
  }
}

void save_detector(const std::filesystem::path& path, const DetectorModel& model) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write model file '" + path.string() + "'");
  out << model.to_json().dump() << '\n';
  if (!out) throw IoError("failed writing model file '" + path.string() + "'");
}

std::unique_ptr<DetectorModel> load_detector(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file '" + path.string() + "'");
  try {
    return detector_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("model file '" + path.string() + "': " + e.what());
  }
}

nlohmann::json encode_real(double value) {
  if (std::isfinite(value)) return value;
  if (std::isnan(value)) return "nan";
  return value > 0 ? "inf" : "-inf";
}

double decode_real(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  const auto text = j.get<std::string>();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace flowgraph
