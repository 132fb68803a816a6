#include "flowgraph/matrix.hpp"

#include <algorithm>

#include "flowgraph/error.hpp"

namespace flowgraph {

Matrix Matrix::from_columns(const std::vector<std::vector<double>>& columns) {
  if (columns.empty()) return {};
  const std::size_t rows = columns.front().size();
  Matrix out(rows, columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c].size() != rows) {
      throw ArgumentError("ragged columns: column " + std::to_string(c) + " has " +
                          std::to_string(columns[c].size()) + " entries, expected " +
                          std::to_string(rows));
    }
    std::copy(columns[c].begin(), columns[c].end(), out.col(c).begin());
  }
  return out;
}

Matrix Matrix::leading_columns(std::size_t count) const {
  count = std::min(count, cols_);
  Matrix out(rows_, count);
  std::copy_n(data_.begin(), rows_ * count, out.data_.begin());
  return out;
}

Matrix Matrix::select_columns(std::span<const std::size_t> indices) const {
  Matrix out(rows_, indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    auto src = col(indices[k]);
    std::copy(src.begin(), src.end(), out.col(k).begin());
  }
  return out;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    sum += diff * diff;
  }
  return sum;
}

}  // namespace flowgraph
