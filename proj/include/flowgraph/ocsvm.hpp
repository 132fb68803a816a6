#pragma once

#include <memory>
#include <vector>

#include "flowgraph/detectors.hpp"

namespace flowgraph {

/// One-class SVM, nu formulation with an RBF kernel
/// k(x, y) = exp(-gamma |x - y|^2):
///
///   min_a  1/2 a^T K a   s.t.  0 <= a_i <= 1/(nu T),  sum_i a_i = 1
///
/// solved by SMO with second-order working-set selection. The decision
/// value is f(x) = sum_i a_i k(x_i, x) - rho and score(x) = -f(x); the
/// threshold is 0 (sign rule), so contamination is unused.
class OneClassSvm final : public DetectorModel {
 public:
  static std::unique_ptr<OneClassSvm> fit(const Matrix& xtrain, const DetectorParams& params);
  static std::unique_ptr<OneClassSvm> from_state(const DetectorParams& params,
                                                 std::size_t dimension,
                                                 const nlohmann::json& state);

  double gamma() const noexcept { return gamma_; }
  double rho() const noexcept { return rho_; }
  /// Dual coefficients over all training points (available after fit only).
  const std::vector<double>& dual_coefficients() const noexcept { return alpha_; }
  /// Final maximal KKT violation of the solver.
  double gap() const noexcept { return gap_; }
  std::size_t iterations() const noexcept { return iterations_; }
  std::size_t support_vector_count() const noexcept { return support_.cols(); }

  /// f(x) for each column.
  std::vector<double> decision_function(const Matrix& x) const;

 protected:
  std::vector<double> score_columns(const Matrix& x) const override;
  nlohmann::json state_to_json() const override;

 private:
  OneClassSvm(DetectorParams params, std::size_t dimension)
      : DetectorModel(std::move(params), dimension) {}

  double gamma_ = 0.0;
  double rho_ = 0.0;
  Matrix support_;
  std::vector<double> support_alpha_;
  std::vector<double> alpha_;
  double gap_ = 0.0;
  std::size_t iterations_ = 0;
};

}  // namespace flowgraph
