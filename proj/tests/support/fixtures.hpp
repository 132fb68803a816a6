#pragma once

#include <cstdint>
#include <vector>

#include "flowgraph/matrix.hpp"
#include "flowgraph/random.hpp"
#include "support/synthetic_traffic.hpp"

namespace flowgraph::testing {

/// `n` standard-normal points in `d` dimensions.
inline Matrix gaussian_cloud(std::uint64_t seed, std::size_t n, std::size_t d) {
  Rng rng(seed);
  Matrix x(d, n);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t r = 0; r < d; ++r) x(r, c) = standard_normal(rng);
  }
  return x;
}

/// A cluster of `n` points followed by one far outlier (last column).
inline Matrix cluster_with_outlier(std::uint64_t seed, std::size_t n = 200, std::size_t d = 2,
                                   double distance = 8.0) {
  const Matrix cloud = gaussian_cloud(seed, n, d);
  Matrix x(d, n + 1);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t r = 0; r < d; ++r) x(r, c) = cloud(r, c);
  }
  for (std::size_t r = 0; r < d; ++r) x(r, n) = distance;
  return x;
}

}  // namespace flowgraph::testing
