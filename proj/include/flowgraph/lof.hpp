#pragma once

#include <memory>
#include <vector>

#include "flowgraph/detectors.hpp"

namespace flowgraph {

/// Scores above this are clamped so LOF stays finite when a point's
/// neighbors are exact duplicates (infinite density) and the point is not.
inline constexpr double kLofCeiling = 1e12;

/// Local outlier factor over exact Euclidean k-nearest neighbors.
///
/// Neighborhoods include every point tied at the k-distance. A query that
/// coincides with a training point is scored as that training point, i.e.
/// one coincident training sample is left out of its neighborhood; scoring
/// the training set therefore reproduces the fit-time LOF values.
///
/// Duplicates: a zero mean reachability distance gives lrd = +inf; the lrd
/// ratio inf/inf is taken as 1 and finite/inf as 0.
class LocalOutlierFactor final : public DetectorModel {
 public:
  static std::unique_ptr<LocalOutlierFactor> fit(const Matrix& xtrain,
                                                 const DetectorParams& params);
  static std::unique_ptr<LocalOutlierFactor> from_state(const DetectorParams& params,
                                                        std::size_t dimension,
                                                        const nlohmann::json& state);

  const std::vector<double>& k_distances() const noexcept { return k_distance_; }
  const std::vector<double>& local_reachability() const noexcept { return lrd_; }

 protected:
  std::vector<double> score_columns(const Matrix& x) const override;
  nlohmann::json state_to_json() const override;

 private:
  LocalOutlierFactor(DetectorParams params, std::size_t dimension)
      : DetectorModel(std::move(params), dimension) {}

  struct Neighborhood {
    double k_distance = 0.0;
    std::vector<std::size_t> members;
    std::vector<double> distances;
  };
  /// Neighbors of x among training points, skipping index `exclude` if set.
  Neighborhood neighborhood(std::span<const double> x, std::ptrdiff_t exclude) const;
  double lrd_of(const Neighborhood& nb) const;
  double lof_of(const Neighborhood& nb, double own_lrd) const;
  void compute_training_state();

  Matrix train_;
  std::vector<double> k_distance_;
  std::vector<double> lrd_;
};

}  // namespace flowgraph
