#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>

#include "flowgraph/detectors.hpp"
#include "flowgraph/error.hpp"
#include "support/fixtures.hpp"

using namespace flowgraph;

namespace {

DetectorParams params_for(DetectorKind kind) {
  DetectorParams p;
  p.kind = kind;
  p.seed = 5;
  p.k = 10;
  p.n_trees = 50;
  p.subsample = 64;
  p.contamination = 0.01;
  p.nu = 0.05;
  return p;
}

constexpr DetectorKind kAll[] = {DetectorKind::iforest, DetectorKind::lof, DetectorKind::ocsvm};

}  // namespace

TEST_CASE("every detector ranks a planted outlier highest and flags it") {
  const auto x = testing::cluster_with_outlier(1);
  for (auto kind : kAll) {
    CAPTURE(to_string(kind));
    const auto model = fit_detector(x, params_for(kind));
    const auto scores = model->score(x);
    const auto top = std::max_element(scores.begin(), scores.end()) - scores.begin();
    CHECK(static_cast<std::size_t>(top) == x.cols() - 1);
    CHECK(model->predict(x).back());
    for (double s : scores) CHECK(std::isfinite(s));
  }
}

TEST_CASE("predict is score > threshold") {
  const auto x = testing::cluster_with_outlier(2);
  for (auto kind : kAll) {
    const auto model = fit_detector(x, params_for(kind));
    const auto scores = model->score(x);
    const auto pred = model->predict(x);
    for (std::size_t i = 0; i < scores.size(); ++i) {
      CHECK(pred[i] == (scores[i] > model->threshold()));
    }
    const auto none = model->predict(x, std::numeric_limits<double>::infinity());
    const auto all = model->predict(x, -std::numeric_limits<double>::infinity());
    CHECK(std::none_of(none.begin(), none.end(), [](bool b) { return b; }));
    CHECK(std::all_of(all.begin(), all.end(), [](bool b) { return b; }));
  }
}

TEST_CASE("empty input and dimension mismatch") {
  const auto x = testing::cluster_with_outlier(3);
  for (auto kind : kAll) {
    const auto model = fit_detector(x, params_for(kind));
    CHECK(model->score(Matrix(2, 0)).empty());
    CHECK_THROWS_AS(model->score(Matrix(3, 4)), ArgumentError);
  }
}

TEST_CASE("scoring the training set reproduces the fit-time scores") {
  const auto x = testing::cluster_with_outlier(4);
  for (auto kind : kAll) {
    CAPTURE(to_string(kind));
    const auto model = fit_detector(x, params_for(kind));
    CHECK(model->score(x) == model->training_scores());
  }
}

TEST_CASE("fits are deterministic") {
  const auto x = testing::cluster_with_outlier(5);
  for (auto kind : kAll) {
    const auto a = fit_detector(x, params_for(kind));
    const auto b = fit_detector(x, params_for(kind));
    CHECK(a->to_json() == b->to_json());
  }
}

TEST_CASE("save and load round-trip exactly") {
  const auto x = testing::cluster_with_outlier(6);
  const auto query = testing::gaussian_cloud(99, 30, 2);
  const auto dir = std::filesystem::temp_directory_path() / "flowgraph_detector_io";
  std::filesystem::create_directories(dir);
  for (auto kind : kAll) {
    const auto model = fit_detector(x, params_for(kind));
    const auto path = dir / (std::string(to_string(kind)) + ".json");
    save_detector(path, *model);
    const auto loaded = load_detector(path);
    CHECK(loaded->kind() == kind);
    CHECK(loaded->threshold() == model->threshold());
    CHECK(loaded->params() == model->params());
    CHECK(loaded->score(query) == model->score(query));
    CHECK(loaded->training_scores() == model->training_scores());
  }
  CHECK_THROWS_AS(load_detector(dir / "missing.json"), IoError);
  CHECK_THROWS_AS(detector_from_json(nlohmann::json{{"format", "other"}}), DataError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("parameter validation") {
  DetectorParams p;
  p.contamination = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p.contamination = 0.6;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = DetectorParams{};
  p.kind = DetectorKind::ocsvm;
  p.nu = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p.nu = 0.5;
  p.gamma = -1.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = DetectorParams{};
  p.subsample = 1;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = DetectorParams{};
  p.kind = DetectorKind::lof;
  p.k = 0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  CHECK_THROWS_AS(parse_detector_kind("svm"), ConfigError);
}

TEST_CASE("parameter JSON round trip keeps 1/d gamma") {
  for (auto kind : kAll) {
    auto p = params_for(kind);
    CHECK(params_from_json(params_to_json(p)) == p);
    p.gamma = 0.25;
    CHECK(params_from_json(params_to_json(p)) == p);
  }
  CHECK(params_to_json(params_for(DetectorKind::ocsvm))["gamma"] == "1/d");
}

TEST_CASE("quantile uses linear interpolation") {
  CHECK(quantile({3, 1, 2, 4}, 0.0) == 1);
  CHECK(quantile({3, 1, 2, 4}, 1.0) == 4);
  CHECK(quantile({3, 1, 2, 4}, 0.5) == 2.5);
  CHECK(quantile({10, 20}, 0.9) == doctest::Approx(19.0));
  CHECK(quantile({7}, 0.3) == 7);
}

TEST_CASE("infinite values survive JSON encoding") {
  for (double v : {1.5, std::numeric_limits<double>::infinity(),
                   -std::numeric_limits<double>::infinity()}) {
    CHECK(decode_real(encode_real(v)) == v);
  }
  CHECK(std::isnan(decode_real(encode_real(std::nan("")))));
}
