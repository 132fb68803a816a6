#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "flowgraph/detectors.hpp"

namespace flowgraph {

/// H(i), exact summation for small i and the asymptotic series beyond.
double harmonic_number(std::size_t i);

/// c(n): average unsuccessful-search path length in a binary search tree
/// of n points; c(2) = 1 and c(n<=1) = 0.
double average_path_length(std::size_t n);

/// Isolation forest: random axis-parallel splits on subsamples, anomaly
/// score s(x) = 2^(-E[h(x)] / c(psi)).
class IsolationForest final : public DetectorModel {
 public:
  struct Node {
    std::int32_t feature = -1;  // -1 marks a leaf
    double split = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::size_t size = 0;  // leaf population
  };
  using Tree = std::vector<Node>;

  static std::unique_ptr<IsolationForest> fit(const Matrix& xtrain, const DetectorParams& params);
  static std::unique_ptr<IsolationForest> from_state(const DetectorParams& params,
                                                     std::size_t dimension,
                                                     const nlohmann::json& state);

  std::size_t tree_count() const noexcept { return trees_.size(); }
  std::size_t sample_size() const noexcept { return sample_size_; }
  /// Mean path length of x over all trees.
  double expected_path_length(std::span<const double> x) const;

 protected:
  std::vector<double> score_columns(const Matrix& x) const override;
  nlohmann::json state_to_json() const override;

 private:
  IsolationForest(DetectorParams params, std::size_t dimension)
      : DetectorModel(std::move(params), dimension) {}

  std::vector<Tree> trees_;
  std::size_t sample_size_ = 0;
};

}  // namespace flowgraph
