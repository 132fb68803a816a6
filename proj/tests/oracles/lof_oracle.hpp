#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace flowgraph::oracle {

using Point = std::vector<double>;

inline double euclidean(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

/// Textbook LOF, O(T^2) per query, written straight from the definitions:
/// k-distance, k-distance neighborhood (ties included), reachability
/// distance, local reachability density and the LOF ratio.
class BruteForceLof {
 public:
  BruteForceLof(std::vector<Point> data, std::size_t k) : data_(std::move(data)), k_(k) {
    for (std::size_t i = 0; i < data_.size(); ++i) kdist_.push_back(k_distance(data_[i], i));
    for (std::size_t i = 0; i < data_.size(); ++i) lrd_.push_back(lrd(data_[i], i));
  }

  double training_lof(std::size_t i) const { return lof(data_[i], i); }
  double query_lof(const Point& q) const { return lof(q, kNone); }
  double training_lrd(std::size_t i) const { return lrd_[i]; }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  std::vector<double> distances(const Point& p, std::size_t self) const {
    std::vector<double> d;
    for (std::size_t o = 0; o < data_.size(); ++o) {
      if (o != self) d.push_back(euclidean(p, data_[o]));
    }
    return d;
  }

  double k_distance(const Point& p, std::size_t self) const {
    auto d = distances(p, self);
    std::sort(d.begin(), d.end());
    return d[k_ - 1];
  }

  std::vector<std::size_t> neighborhood(const Point& p, std::size_t self) const {
    const double kd = k_distance(p, self);
    std::vector<std::size_t> out;
    for (std::size_t o = 0; o < data_.size(); ++o) {
      if (o != self && euclidean(p, data_[o]) <= kd) out.push_back(o);
    }
    return out;
  }

  double lrd(const Point& p, std::size_t self) const {
    const auto nb = neighborhood(p, self);
    double sum = 0.0;
    for (std::size_t o : nb) sum += std::max(kdist_[o], euclidean(p, data_[o]));
    const double mean = sum / static_cast<double>(nb.size());
    return mean > 0.0 ? 1.0 / mean : std::numeric_limits<double>::infinity();
  }

  double lof(const Point& p, std::size_t self) const {
    const auto nb = neighborhood(p, self);
    const double own = self == kNone ? lrd(p, self) : lrd_[self];
    double sum = 0.0;
    for (std::size_t o : nb) sum += lrd_[o] / own;
    return sum / static_cast<double>(nb.size());
  }

  std::vector<Point> data_;
  std::size_t k_;
  std::vector<double> kdist_;
  std::vector<double> lrd_;
};

}  // namespace flowgraph::oracle
