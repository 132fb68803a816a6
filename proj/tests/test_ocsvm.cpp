#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flowgraph/error.hpp"
#include "flowgraph/ocsvm.hpp"
#include "support/fixtures.hpp"

using namespace flowgraph;

namespace {

DetectorParams svm(double nu, std::optional<double> gamma = std::nullopt) {
  DetectorParams p;
  p.kind = DetectorKind::ocsvm;
  p.nu = nu;
  p.gamma = gamma;
  return p;
}

}  // namespace

TEST_CASE("dual feasibility and the nu bound on a Gaussian fixture") {
  const auto x = testing::gaussian_cloud(500, 500, 2);
  for (double nu : {0.05, 0.1, 0.2}) {
    CAPTURE(nu);
    const auto model = OneClassSvm::fit(x, svm(nu));
    const auto& alpha = model->dual_coefficients();
    const double upper = 1.0 / (nu * 500.0);
    for (double a : alpha) {
      CHECK(a >= 0.0);
      CHECK(a <= upper + 1e-12);
    }
    CHECK(std::accumulate(alpha.begin(), alpha.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(model->gap() <= 1e-4);
    const auto f = model->decision_function(x);
    const auto outside = std::count_if(f.begin(), f.end(), [](double v) { return v < 0; });
    CHECK(static_cast<double>(outside) / 500.0 <= nu + 0.05);
    // nu also lower-bounds the support-vector fraction.
    CHECK(static_cast<double>(model->support_vector_count()) / 500.0 >= nu - 1e-9);
  }
}

TEST_CASE("score is the negated decision value and the threshold is zero") {
  const auto x = testing::cluster_with_outlier(7);
  const auto model = OneClassSvm::fit(x, svm(0.1));
  const auto f = model->decision_function(x);
  const auto s = model->score(x);
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(s[i] == -f[i]);
  CHECK(model->threshold() == 0.0);
  CHECK(model->predict(x).back());
}

TEST_CASE("identical training points sit on the boundary") {
  const Matrix x(2, 20, 4.0);
  const auto model = OneClassSvm::fit(x, svm(0.3));
  for (double v : model->decision_function(x)) CHECK(std::abs(v) <= 1e-4);
}

TEST_CASE("a vanishing bandwidth flattens the decision function") {
  Matrix x = testing::gaussian_cloud(8, 60, 2);
  for (std::size_t c = 30; c < 60; ++c) x(0, c) += 10.0;
  const auto model = OneClassSvm::fit(x, svm(0.1, 1e-12));
  const auto f = model->decision_function(x);
  const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
  CHECK(*hi - *lo < 1e-8);
  CHECK(std::abs(*lo) < 1e-8);
  CHECK(std::abs(*hi) < 1e-8);
}

TEST_CASE("default gamma is 1/d") {
  const auto x = testing::gaussian_cloud(9, 40, 4);
  CHECK(OneClassSvm::fit(x, svm(0.2))->gamma() == 0.25);
  CHECK(OneClassSvm::fit(x, svm(0.2, 2.0))->gamma() == 2.0);
}

TEST_CASE("non-convergence reports the gap") {
  const auto x = testing::gaussian_cloud(10, 200, 2);
  auto p = svm(0.1);
  p.max_iterations = 1;
  p.tolerance = 1e-12;
  try {
    OneClassSvm::fit(x, p);
    FAIL("expected a fit error");
  } catch (const FitError& e) {
    CHECK(e.gap() > 1e-12);
  }
}

TEST_CASE("nu = 1 puts every coefficient at 1/T") {
  const auto x = testing::gaussian_cloud(11, 25, 2);
  const auto model = OneClassSvm::fit(x, svm(1.0));
  for (double a : model->dual_coefficients()) CHECK(a == doctest::Approx(1.0 / 25.0));
}

TEST_CASE("fewer than two samples cannot be fitted") {
  CHECK_THROWS_AS(OneClassSvm::fit(Matrix(2, 1), svm(0.5)), FitError);
}
