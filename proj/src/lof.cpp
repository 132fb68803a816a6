#include "flowgraph/lof.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "flowgraph/error.hpp"
#include "flowgraph/parallel.hpp"

namespace flowgraph {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double lrd_ratio(double neighbor_lrd, double own_lrd) {
  if (std::isinf(own_lrd)) return std::isinf(neighbor_lrd) ? 1.0 : 0.0;
  if (std::isinf(neighbor_lrd)) return kLofCeiling;
  return neighbor_lrd / own_lrd;
}

}  // namespace

std::unique_ptr<LocalOutlierFactor> LocalOutlierFactor::fit(const Matrix& xtrain,
                                                            const DetectorParams& params) {
  params.validate();
  if (params.kind != DetectorKind::lof) throw ArgumentError("lof: wrong parameter kind");
  if (params.k >= xtrain.cols()) {
    throw FitError("lof: k=" + std::to_string(params.k) + " must be smaller than the " +
                   std::to_string(xtrain.cols()) + " training samples");
  }
  std::unique_ptr<LocalOutlierFactor> model(new LocalOutlierFactor(params, xtrain.rows()));
  model->train_ = xtrain;
  model->compute_training_state();
  return model;
}

void LocalOutlierFactor::compute_training_state() {
  const std::size_t total = train_.cols();
  std::vector<Neighborhood> hoods(total);
  k_distance_.assign(total, 0.0);
  parallel_for(total, [&](std::size_t p) {
    hoods[p] = neighborhood(train_.col(p), static_cast<std::ptrdiff_t>(p));
    k_distance_[p] = hoods[p].k_distance;
  });
  lrd_.assign(total, 0.0);
  parallel_for(total, [&](std::size_t p) { lrd_[p] = lrd_of(hoods[p]); });
  std::vector<double> scores(total);
  parallel_for(total, [&](std::size_t p) { scores[p] = lof_of(hoods[p], lrd_[p]); });
  set_training_scores(std::move(scores));
}

LocalOutlierFactor::Neighborhood LocalOutlierFactor::neighborhood(std::span<const double> x,
                                                                  std::ptrdiff_t exclude) const {
  const std::size_t total = train_.cols();
  const std::size_t k = params().k;
  std::vector<double> dist(total);
  for (std::size_t o = 0; o < total; ++o) dist[o] = std::sqrt(squared_distance(x, train_.col(o)));

  if (exclude < 0) {
    // A query equal to a training point stands in for that point.
    for (std::size_t o = 0; o < total; ++o) {
      if (dist[o] == 0.0) {
        exclude = static_cast<std::ptrdiff_t>(o);
        break;
      }
    }
  }

  std::vector<double> candidates;
  candidates.reserve(total);
  for (std::size_t o = 0; o < total; ++o) {
    if (static_cast<std::ptrdiff_t>(o) != exclude) candidates.push_back(dist[o]);
  }
  std::nth_element(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k - 1),
                   candidates.end());

  Neighborhood nb;
  nb.k_distance = candidates[k - 1];
  for (std::size_t o = 0; o < total; ++o) {
    if (static_cast<std::ptrdiff_t>(o) != exclude && dist[o] <= nb.k_distance) {
      nb.members.push_back(o);
      nb.distances.push_back(dist[o]);
    }
  }
  return nb;
}

double LocalOutlierFactor::lrd_of(const Neighborhood& nb) const {
  double reach_sum = 0.0;
  for (std::size_t i = 0; i < nb.members.size(); ++i) {
    reach_sum += std::max(k_distance_[nb.members[i]], nb.distances[i]);
  }
  const double mean_reach = reach_sum / static_cast<double>(nb.members.size());
  return mean_reach > 0.0 ? 1.0 / mean_reach : kInf;
}

double LocalOutlierFactor::lof_of(const Neighborhood& nb, double own_lrd) const {
  double sum = 0.0;
  for (std::size_t o : nb.members) sum += lrd_ratio(lrd_[o], own_lrd);
  return std::min(sum / static_cast<double>(nb.members.size()), kLofCeiling);
}

std::vector<double> LocalOutlierFactor::score_columns(const Matrix& x) const {
  std::vector<double> scores(x.cols());
  parallel_for(x.cols(), [&](std::size_t c) {
    const auto nb = neighborhood(x.col(c), -1);
    scores[c] = lof_of(nb, lrd_of(nb));
  });
  return scores;
}

nlohmann::json LocalOutlierFactor::state_to_json() const {
  return {{"rows", train_.rows()},
          {"cols", train_.cols()},
          {"train", std::vector<double>(train_.data().begin(), train_.data().end())}};
}

std::unique_ptr<LocalOutlierFactor> LocalOutlierFactor::from_state(const DetectorParams& params,
                                                                   std::size_t dimension,
                                                                   const nlohmann::json& state) {
  std::unique_ptr<LocalOutlierFactor> model(new LocalOutlierFactor(params, dimension));
  const auto rows = state.at("rows").get<std::size_t>();
  const auto cols = state.at("cols").get<std::size_t>();
  const auto data = state.at("train").get<std::vector<double>>();
  if (rows != dimension || data.size() != rows * cols || params.k >= cols) {
    throw DataError("lof: inconsistent stored training matrix");
  }
  model->train_ = Matrix(rows, cols);
  for (std::size_t c = 0; c < cols; ++c) {
    std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(c * rows), rows,
                model->train_.col(c).begin());
  }
  // Densities are a pure function of the stored points; rebuild them.
  model->compute_training_state();
  return model;
}

}  // namespace flowgraph
