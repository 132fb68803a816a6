#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "flowgraph/error.hpp"
#include "flowgraph/iforest.hpp"
#include "support/fixtures.hpp"

using namespace flowgraph;

namespace {

DetectorParams forest(std::size_t trees = 100, std::size_t psi = 256, std::uint64_t seed = 1) {
  DetectorParams p;
  p.kind = DetectorKind::iforest;
  p.n_trees = trees;
  p.subsample = psi;
  p.seed = seed;
  return p;
}

}  // namespace

TEST_CASE("harmonic numbers and average path length") {
  CHECK(harmonic_number(1) == 1.0);
  CHECK(harmonic_number(4) == doctest::Approx(25.0 / 12.0));
  double exact = 0;
  for (std::size_t i = 1; i <= 5000; ++i) exact += 1.0 / static_cast<double>(i);
  CHECK(harmonic_number(5000) == doctest::Approx(exact).epsilon(1e-12));
  CHECK(average_path_length(0) == 0.0);
  CHECK(average_path_length(1) == 0.0);
  CHECK(average_path_length(2) == 1.0);
  CHECK(average_path_length(256) == doctest::Approx(2 * harmonic_number(255) - 2.0 * 255 / 256));
  for (std::size_t n = 2; n < 1000; n += 37) CHECK(average_path_length(n) > 0.0);
}

TEST_CASE("scores lie in (0, 1]") {
  const auto x = testing::cluster_with_outlier(3, 300, 3);
  const auto model = IsolationForest::fit(x, forest(50, 64));
  for (double s : model->score(x)) {
    CHECK(s > 0.0);
    CHECK(s <= 1.0);
  }
  CHECK(model->tree_count() == 50);
  CHECK(model->sample_size() == 64);
}

TEST_CASE("subsample larger than the data uses all points") {
  const auto x = testing::gaussian_cloud(1, 30, 2);
  const auto model = IsolationForest::fit(x, forest(10, 256));
  CHECK(model->sample_size() == 30);
}

TEST_CASE("psi = 2 gives s = 2^-E[h]") {
  const auto x = testing::gaussian_cloud(2, 50, 2);
  const auto model = IsolationForest::fit(x, forest(20, 2));
  const auto scores = model->score(x);
  for (std::size_t i = 0; i < x.cols(); i += 7) {
    CHECK(scores[i] == doctest::Approx(std::pow(2.0, -model->expected_path_length(x.col(i)))));
  }
}

TEST_CASE("identical points give one constant score") {
  const Matrix x(3, 40, 1.5);
  const auto model = IsolationForest::fit(x, forest(20, 16));
  const auto scores = model->score(x);
  for (double s : scores) CHECK(s == scores.front());
}

TEST_CASE("planted outlier exceeds the cluster's 99th percentile") {
  const auto x = testing::cluster_with_outlier(11);
  const auto model = IsolationForest::fit(x, forest());
  auto scores = model->score(x);
  const double outlier = scores.back();
  scores.pop_back();
  CHECK(outlier > quantile(scores, 0.99));
}

TEST_CASE("seeds matter and are reproducible") {
  const auto x = testing::cluster_with_outlier(12);
  const auto a = IsolationForest::fit(x, forest(30, 64, 1));
  const auto b = IsolationForest::fit(x, forest(30, 64, 1));
  const auto c = IsolationForest::fit(x, forest(30, 64, 2));
  CHECK(a->score(x) == b->score(x));
  CHECK(a->score(x) != c->score(x));
}

TEST_CASE("fewer than two samples cannot be fitted") {
  CHECK_THROWS_AS(IsolationForest::fit(Matrix(2, 1), forest()), FitError);
}

TEST_CASE("threshold is the (1-c) quantile of training scores") {
  const auto x = testing::cluster_with_outlier(13);
  auto p = forest(40, 128);
  p.contamination = 0.05;
  const auto model = IsolationForest::fit(x, p);
  CHECK(model->threshold() == quantile(model->training_scores(), 0.95));
  const auto pred = model->predict(x);
  const auto flagged = std::count(pred.begin(), pred.end(), true);
  CHECK(flagged <= static_cast<long>(std::ceil(0.05 * static_cast<double>(x.cols()))) + 1);
}
