#include <doctest.h>

#include <cmath>
#include <numeric>

#include "flowgraph/error.hpp"
#include "flowgraph/eval_harness.hpp"
#include "flowgraph/graph_build.hpp"
#include "flowgraph/random.hpp"
#include "flowgraph/topo_features.hpp"
#include "support/fixtures.hpp"
#include "support/stub_detector.hpp"
#include "flowgraph/parallel.hpp"
#include "flowgraph/flow_ingest.hpp"

using namespace flowgraph;

namespace {

ExpandedDataset labeled(const Matrix& x, std::vector<bool> labels) {
  ExpandedDataset d;
  d.regime = Regime::standard;
  d.values = x;
  d.labels = std::move(labels);
  d.column_ids.resize(x.cols());
  std::iota(d.column_ids.begin(), d.column_ids.end(), 0);
  d.first_seen = d.column_ids;
  d.categories.resize(x.cols());
  return d;
}

/// Cluster plus a far outlier, labeled accordingly.
ExpandedDataset outlier_fixture(std::uint64_t seed, std::size_t n = 120) {
  const auto x = testing::cluster_with_outlier(seed, n, 2);
  std::vector<bool> y(x.cols(), false);
  y.back() = true;
  auto d = labeled(x, y);
  d.categories.back() = "Worms";
  return d;
}

DetectorParams iforest(std::size_t trees, double c) {
  DetectorParams p;
  p.kind = DetectorKind::iforest;
  p.n_trees = trees;
  p.subsample = 64;
  p.contamination = c;
  return p;
}

DetectorParams lof(std::size_t k, double c) {
  DetectorParams p;
  p.kind = DetectorKind::lof;
  p.k = k;
  p.contamination = c;
  return p;
}

}  // namespace

TEST_CASE("balanced accuracy") {
  CHECK(balanced_accuracy({true, false, true}, {true, false, true}).value == 1.0);
  const auto all_normal = balanced_accuracy({false, false, false, false}, {true, false, false, true});
  CHECK(all_normal.value == 0.5);
  CHECK(all_normal.tpr == 0.0);
  CHECK(all_normal.tnr == 1.0);

  std::vector<bool> truth(4588, false), pred(4588, false);
  for (std::size_t i = 0; i < 5; ++i) truth[i * 900] = pred[i * 900] = true;
  const auto exact = balanced_accuracy(pred, truth);
  CHECK(exact.value == 1.0);
  CHECK(exact.counts == Confusion{5, 0, 4583, 0});

  const auto one_class = balanced_accuracy({true, false}, {false, false});
  CHECK(one_class.single_class);
  CHECK(one_class.value == 0.5);
  CHECK(std::isnan(one_class.tpr));
  CHECK_THROWS_AS(balanced_accuracy({true}, {true, false}), ArgumentError);
}

TEST_CASE("a coin-flip predictor scores about one half") {
  Rng rng(1);
  std::vector<bool> pred(10000), truth(10000);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    truth[i] = i % 2 == 0;
    pred[i] = uniform_index(rng, 2) == 1;
  }
  CHECK(std::abs(balanced_accuracy(pred, truth).value - 0.5) <= 0.05);
}

TEST_CASE("grid search picks the argmax and keeps the first of equals") {
  std::map<Regime, ExpandedDataset> tune{{Regime::standard, outlier_fixture(1)}};
  GridSpec grid;
  grid.regimes = {Regime::standard};
  // A huge contamination flags a third of the points; a tiny one only the outlier.
  grid.detectors = {{iforest(50, 0.3), iforest(50, 0.005), iforest(60, 0.005)}};
  const auto result = grid_search(tune, grid);
  REQUIRE(result.best.at(Regime::standard).size() == 1);
  CHECK(result.best.at(Regime::standard)[0] == iforest(50, 0.005));
  CHECK(result.report.candidates.size() == 3);
  CHECK(result.report.candidates[1].ba.value == 1.0);
  CHECK(result.report.candidates[0].ba.value < 1.0);
  const auto& cells = result.report.cells;
  REQUIRE(cells.size() == 3);
  CHECK(cells[0].detector == "iforest");
  CHECK(cells[1].detector == kEnsembleMajority);
  CHECK(cells[2].detector == kEnsembleAverage);
  CHECK(result.report.shapes.at(Regime::standard) == DataShape{121, 2, 1});
}

TEST_CASE("a single candidate is selected") {
  std::map<Regime, ExpandedDataset> tune{{Regime::standard, outlier_fixture(2)}};
  GridSpec grid{{Regime::standard}, {{lof(5, 0.01)}}, {}};
  CHECK(grid_search(tune, grid).best.at(Regime::standard)[0] == lof(5, 0.01));
}

TEST_CASE("grid search needs labels and reports when every candidate fails") {
  auto d = outlier_fixture(3, 10);
  GridSpec grid{{Regime::standard}, {{lof(50, 0.1), lof(60, 0.1)}}, {}};
  try {
    grid_search({{Regime::standard, d}}, grid);
    FAIL("expected failure");
  } catch (const FitError& e) {
    const std::string what = e.what();
    CHECK(what.find("k=50") != std::string::npos);
    CHECK(what.find("k=60") != std::string::npos);
  }
  d.labels.reset();
  CHECK_THROWS_AS(grid_search({{Regime::standard, d}}, GridSpec{{Regime::standard}, {{lof(5, 0.1)}}, {}}),
                  DataError);
}

TEST_CASE("candidates are evaluated the same regardless of worker count") {
  std::map<Regime, ExpandedDataset> tune{{Regime::standard, outlier_fixture(4)}};
  GridSpec grid{{Regime::standard}, {{iforest(20, 0.01), iforest(40, 0.05)}, {lof(5, 0.01), lof(10, 0.05)}}, {}};
  set_worker_count(1);
  const auto a = grid_search(tune, grid);
  set_worker_count(3);
  const auto b = grid_search(tune, grid);
  set_worker_count(0);
  REQUIRE(a.report.candidates.size() == b.report.candidates.size());
  for (std::size_t i = 0; i < a.report.candidates.size(); ++i) {
    CHECK(a.report.candidates[i].ba.value == b.report.candidates[i].ba.value);
  }
}

TEST_CASE("training report: per-cell failures do not stop other detectors") {
  std::map<Regime, ExpandedDataset> train{{Regime::standard, outlier_fixture(5, 30)}};
  std::map<Regime, std::vector<DetectorParams>> params{
      {Regime::standard, {lof(100, 0.05), iforest(30, 0.05)}}};
  const auto result = train_and_report(train, params, EnsembleSettings{});
  const auto& cells = result.report.cells;
  REQUIRE(cells.size() == 4);
  CHECK(cells[0].detector == "lof");
  CHECK(cells[0].failed);
  CHECK(cells[1].detector == "iforest");
  CHECK_FALSE(cells[1].failed);
  CHECK(result.models.at(Regime::standard).detectors.size() == 1);
  REQUIRE(result.report.breakdowns.size() == 3);
  CHECK(result.report.breakdowns[0].counts.at("Worms").total == 1);
}

TEST_CASE("an empty regime list gives an empty report") {
  const auto result = train_and_report({}, {}, EnsembleSettings{});
  CHECK(result.report.cells.empty());
  CHECK(result.models.empty());
}

TEST_CASE("attack breakdown") {
  const std::vector<std::optional<std::string>> cats = {"Worms", std::nullopt, "Worms", "DoS", "Worms"};
  const std::vector<bool> truth = {true, false, true, true, true};
  const auto all = attack_breakdown(truth, truth, cats);
  CHECK(all.at("Worms") == CategoryCount{3, 3});
  CHECK(all.at("DoS") == CategoryCount{1, 1});
  const auto none = attack_breakdown(std::vector<bool>(5, false), truth, cats);
  CHECK(none.at("Worms") == CategoryCount{0, 3});
  std::size_t total = 0;
  for (const auto& [cat, c] : none) total += c.total;
  CHECK(total == 4);
  CHECK(attack_breakdown({false}, {false}, {std::nullopt}).empty());
  try {
    attack_breakdown({true, true}, {true, true}, {"DoS", std::nullopt}, {40, 41});
    FAIL("expected a data error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("41") != std::string::npos);
  }
}

TEST_CASE("index range audit") {
  CHECK(ranges_disjoint_and_ordered({{"tune", 0, 10}, {"train", 10, 110}, {"test", 110, 1000}}));
  CHECK_FALSE(ranges_disjoint_and_ordered({{"tune", 0, 10}, {"train", 5, 110}}));
  CHECK_FALSE(ranges_disjoint_and_ordered({{"train", 10, 20}, {"tune", 0, 10}}));
}

TEST_CASE("rolling test: nested fractions, monotone TP, scaled FP") {
  const auto x = testing::cluster_with_outlier(6, 300, 2);
  std::vector<bool> y(x.cols(), false);
  y.back() = true;
  y[10] = true;
  auto data = labeled(x, y);
  for (auto& f : data.first_seen) f += 1000;
  RegimeModels models;
  models.detectors.push_back(fit_detector(x, iforest(30, 0.05)));
  std::vector<std::string> warnings;
  const std::vector<double> fractions = {0.1, 0.3, 0.5, 0.7, 1.0};
  const auto points = rolling_test({{Regime::standard, models}}, {{Regime::standard, data}}, 1000,
                                   x.cols(), fractions, warnings);
  REQUIRE(points.size() == fractions.size());
  CHECK(warnings.empty());
  std::size_t tp = 0;
  double max_scaled = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    CHECK(points[i].samples == prefix_length(x.cols(), fractions[i]));
    CHECK(points[i].counts.tp >= tp);
    tp = points[i].counts.tp;
    max_scaled = std::max(max_scaled, points[i].scaled_fp);
    CHECK(points[i].scaled_fp >= 0.0);
    CHECK(points[i].scaled_fp <= 1.0);
  }
  CHECK(max_scaled == 1.0);
  CHECK(points.back().samples == x.cols());
}

TEST_CASE("rolling test: a flag-everything model and empty or clipped fractions") {
  const auto x = testing::gaussian_cloud(7, 50, 2);
  std::vector<bool> y(50, false);
  y[3] = y[40] = true;
  auto data = labeled(x, y);
  RegimeModels models;
  models.detectors.push_back(std::make_shared<testing::StubDetector>(2, 0, -1e9, x));
  std::vector<std::string> warnings;
  const auto points = rolling_test({{Regime::standard, models}}, {{Regime::standard, data}}, 0, 50,
                                   {0.001, 0.5, 2.0}, warnings);
  REQUIRE(points.size() == 3);
  CHECK(points[0].samples == 1);
  CHECK(points[2].samples == 50);
  for (const auto& p : points) {
    if (p.counts.tp + p.counts.fn) CHECK(p.tpr == 1.0);
    CHECK((p.counts.tn + p.counts.fp == 0 || p.tnr == 0.0));
  }
  CHECK(warnings.size() == 1);

  warnings.clear();
  auto late = data;
  for (auto& f : late.first_seen) f = 10;
  const auto empty = rolling_test({{Regime::standard, models}}, {{Regime::standard, late}}, 0, 50,
                                  {0.1}, warnings);
  CHECK(empty[0].samples == 0);
  CHECK(warnings.size() == 1);
}
