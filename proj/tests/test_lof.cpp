#include <doctest.h>

#include <cmath>
#include <limits>

#include "flowgraph/error.hpp"
#include "flowgraph/lof.hpp"
#include "oracles/lof_oracle.hpp"
#include "support/fixtures.hpp"

using namespace flowgraph;

namespace {

DetectorParams lof(std::size_t k) {
  DetectorParams p;
  p.kind = DetectorKind::lof;
  p.k = k;
  return p;
}

std::vector<oracle::Point> points_of(const Matrix& x) {
  std::vector<oracle::Point> out;
  for (std::size_t c = 0; c < x.cols(); ++c) out.emplace_back(x.col(c).begin(), x.col(c).end());
  return out;
}

Matrix line(std::initializer_list<double> values) {
  std::vector<std::vector<double>> cols;
  for (double v : values) cols.push_back({v});
  return Matrix::from_columns(cols);
}

}  // namespace

TEST_CASE("uniform grid interior points have LOF near one") {
  const auto x = line({0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  const auto model = LocalOutlierFactor::fit(x, lof(2));
  const auto& scores = model->training_scores();
  for (std::size_t i = 2; i <= 7; ++i) CHECK(std::abs(scores[i] - 1.0) < 0.2);
}

TEST_CASE("the far point of {0,1,2,10} has the largest LOF, as the oracle says") {
  const auto x = line({0, 1, 2, 10});
  const auto model = LocalOutlierFactor::fit(x, lof(2));
  const oracle::BruteForceLof expect(points_of(x), 2);
  const auto& s = model->training_scores();
  for (std::size_t i = 0; i < 4; ++i) CHECK(s[i] == doctest::Approx(expect.training_lof(i)).epsilon(1e-12));
  CHECK(s[3] > s[0]);
  CHECK(s[3] > s[1]);
  CHECK(s[3] > s[2]);
}

TEST_CASE("identical points all score one") {
  const Matrix x(2, 12, 3.0);
  const auto model = LocalOutlierFactor::fit(x, lof(3));
  for (double s : model->training_scores()) CHECK(s == 1.0);
}

TEST_CASE("a point next to a duplicate cluster stays finite") {
  const auto x = line({0, 0, 0, 0, 5});
  const auto model = LocalOutlierFactor::fit(x, lof(2));
  const auto& s = model->training_scores();
  CHECK(s[0] == 1.0);
  CHECK(std::isfinite(s[4]));
  CHECK(s[4] == kLofCeiling);
}

TEST_CASE("an exact duplicate of a training point scores like it") {
  const auto x = testing::cluster_with_outlier(21, 40, 2);
  const auto model = LocalOutlierFactor::fit(x, lof(5));
  const auto scores = model->score(x.leading_columns(10));
  for (std::size_t i = 0; i < 10; ++i) CHECK(scores[i] == model->training_scores()[i]);
}

TEST_CASE("k must be below the sample count") {
  CHECK_THROWS_AS(LocalOutlierFactor::fit(line({1, 2, 3}), lof(3)), FitError);
  CHECK_NOTHROW(LocalOutlierFactor::fit(line({1, 2, 3}), lof(2)));
}

TEST_CASE("matches the brute-force oracle on random data, including new queries") {
  Rng rng(31);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 6 + uniform_index(rng, 45);
    const std::size_t d = 1 + uniform_index(rng, 4);
    const auto x = testing::gaussian_cloud(rng(), n, d);
    const auto queries = testing::gaussian_cloud(rng(), 5, d);
    for (std::size_t k : {1, 2, 5}) {
      const auto model = LocalOutlierFactor::fit(x, lof(k));
      const oracle::BruteForceLof expect(points_of(x), k);
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(model->training_scores()[i] ==
              doctest::Approx(expect.training_lof(i)).epsilon(1e-9));
      }
      const auto qs = model->score(queries);
      for (std::size_t q = 0; q < queries.cols(); ++q) {
        oracle::Point pt(queries.col(q).begin(), queries.col(q).end());
        CHECK(qs[q] == doctest::Approx(expect.query_lof(pt)).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("ties at the k-distance enlarge the neighborhood") {
  // Point 0 has two neighbors at distance 1; with k = 1 both belong to it.
  const auto x = line({0, 1, -1, 5});
  const auto model = LocalOutlierFactor::fit(x, lof(1));
  const oracle::BruteForceLof expect(points_of(x), 1);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(model->training_scores()[i] == doctest::Approx(expect.training_lof(i)).epsilon(1e-12));
  }
}
