#include "flowgraph/ocsvm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <unordered_map>

#include "flowgraph/error.hpp"
#include "flowgraph/parallel.hpp"
#include "flowgraph/text_io.hpp"

namespace flowgraph {
namespace {

constexpr std::size_t kCacheBudgetBytes = std::size_t{256} << 20;
constexpr double kTau = 1e-12;

double rbf(std::span<const double> a, std::span<const double> b, double gamma) {
  return std::exp(-gamma * squared_distance(a, b));
}

/// LRU cache of kernel matrix columns.
class KernelColumns {
 public:
  KernelColumns(const Matrix& x, double gamma) : x_(x), gamma_(gamma) {
    const std::size_t per_column = std::max<std::size_t>(1, x.cols() * sizeof(double));
    capacity_ = std::max<std::size_t>(2, kCacheBudgetBytes / per_column);
  }

  std::span<const double> column(std::size_t i) {
    auto it = entries_.find(i);
    if (it != entries_.end()) {
      order_.splice(order_.begin(), order_, it->second.position);
      return it->second.values;
    }
    if (entries_.size() >= capacity_) {
      entries_.erase(order_.back());
      order_.pop_back();
    }
    order_.push_front(i);
    auto& entry = entries_[i];
    entry.position = order_.begin();
    entry.values.resize(x_.cols());
    const auto xi = x_.col(i);
    constexpr std::size_t kChunk = 1024;
    const std::size_t chunks = (x_.cols() + kChunk - 1) / kChunk;
    parallel_for(chunks, [&](std::size_t c) {
      const std::size_t end = std::min(x_.cols(), (c + 1) * kChunk);
      for (std::size_t j = c * kChunk; j < end; ++j) entry.values[j] = rbf(xi, x_.col(j), gamma_);
    });
    return entry.values;
  }

 private:
  struct Entry {
    std::vector<double> values;
    std::list<std::size_t>::iterator position;
  };
  const Matrix& x_;
  double gamma_;
  std::size_t capacity_;
  std::list<std::size_t> order_;
  std::unordered_map<std::size_t, Entry> entries_;
};

}  // namespace

std::unique_ptr<OneClassSvm> OneClassSvm::fit(const Matrix& xtrain, const DetectorParams& params) {
  params.validate();
  if (params.kind != DetectorKind::ocsvm) throw ArgumentError("ocsvm: wrong parameter kind");
  const std::size_t total = xtrain.cols();
  if (total < 2) throw FitError("ocsvm: need at least 2 training samples");
  if (xtrain.rows() < 1) throw FitError("ocsvm: need at least 1 feature");

  std::unique_ptr<OneClassSvm> model(new OneClassSvm(params, xtrain.rows()));
  model->gamma_ = params.gamma.value_or(1.0 / static_cast<double>(xtrain.rows()));
  const double upper = 1.0 / (params.nu * static_cast<double>(total));

  // Feasible start: the first floor(nu T) coefficients at the bound, the
  // remainder of the unit mass on the next one.
  std::vector<double> alpha(total, 0.0);
  const auto full = std::min(total, static_cast<std::size_t>(std::floor(params.nu * static_cast<double>(total))));
  for (std::size_t i = 0; i < full; ++i) alpha[i] = upper;
  if (full < total) alpha[full] = std::max(0.0, 1.0 - static_cast<double>(full) * upper);

  KernelColumns kernel(xtrain, model->gamma_);
  std::vector<double> grad(total, 0.0);
  for (std::size_t j = 0; j < total; ++j) {
    if (alpha[j] == 0.0) continue;
    const auto kj = kernel.column(j);
    for (std::size_t t = 0; t < total; ++t) grad[t] += alpha[j] * kj[t];
  }

  double gap = std::numeric_limits<double>::infinity();
  std::size_t iter = 0;
  for (;; ++iter) {
    // i: coefficient that can shrink with the largest gradient.
    std::ptrdiff_t i = -1;
    double g_max = -std::numeric_limits<double>::infinity();
    double g_min = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < total; ++t) {
      if (alpha[t] > 0.0 && grad[t] > g_max) {
        g_max = grad[t];
        i = static_cast<std::ptrdiff_t>(t);
      }
      if (alpha[t] < upper) g_min = std::min(g_min, grad[t]);
    }
    gap = (i < 0 || std::isinf(g_min)) ? 0.0 : g_max - g_min;
    if (gap <= params.tolerance) break;
    if (iter >= params.max_iterations) {
      throw FitError("ocsvm: no convergence after " + std::to_string(iter) +
                         " iterations (gap " + format_double(gap) + ")",
                     gap);
    }

    const auto ui = static_cast<std::size_t>(i);
    const auto ki = kernel.column(ui);
    // j: second-order choice among coefficients that can grow.
    std::ptrdiff_t j = -1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < total; ++t) {
      if (alpha[t] >= upper || grad[t] >= g_max) continue;
      const double diff = g_max - grad[t];
      double curvature = ki[ui] + 1.0 - 2.0 * ki[t];
      if (curvature <= 0.0) curvature = kTau;
      const double gain = -(diff * diff) / curvature;
      if (gain < best) {
        best = gain;
        j = static_cast<std::ptrdiff_t>(t);
      }
    }
    if (j < 0) break;
    const auto uj = static_cast<std::size_t>(j);
    // Cached columns live in map nodes, so ki survives this lookup.
    const auto kj = kernel.column(uj);

    double curvature = ki[ui] + kj[uj] - 2.0 * ki[uj];
    if (curvature <= 0.0) curvature = kTau;
    double step = (grad[ui] - grad[uj]) / curvature;
    bool i_hits_zero = false, j_hits_upper = false;
    if (step >= alpha[ui]) {
      step = alpha[ui];
      i_hits_zero = true;
    }
    if (step >= upper - alpha[uj]) {
      step = upper - alpha[uj];
      j_hits_upper = true;
      i_hits_zero = i_hits_zero && step == alpha[ui];
    }
    alpha[ui] = i_hits_zero ? 0.0 : alpha[ui] - step;
    alpha[uj] = j_hits_upper ? upper : alpha[uj] + step;
    for (std::size_t t = 0; t < total; ++t) grad[t] += step * (kj[t] - ki[t]);
  }

  // rho: mean gradient over free coefficients, else the midpoint of the
  // feasible interval.
  double free_sum = 0.0;
  std::size_t free_count = 0;
  double lower_bound = -std::numeric_limits<double>::infinity();
  double upper_bound = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < total; ++t) {
    if (alpha[t] > 0.0 && alpha[t] < upper) {
      free_sum += grad[t];
      ++free_count;
    } else if (alpha[t] >= upper) {
      lower_bound = std::max(lower_bound, grad[t]);
    } else {
      upper_bound = std::min(upper_bound, grad[t]);
    }
  }
  if (free_count > 0) {
    model->rho_ = free_sum / static_cast<double>(free_count);
  } else if (std::isinf(lower_bound)) {
    model->rho_ = upper_bound;
  } else if (std::isinf(upper_bound)) {
    model->rho_ = lower_bound;
  } else {
    model->rho_ = 0.5 * (lower_bound + upper_bound);
  }

  std::vector<std::size_t> support;
  for (std::size_t t = 0; t < total; ++t) {
    if (alpha[t] > 0.0) support.push_back(t);
  }
  model->support_ = xtrain.select_columns(support);
  for (std::size_t t : support) model->support_alpha_.push_back(alpha[t]);
  model->alpha_ = std::move(alpha);
  model->gap_ = gap;
  model->iterations_ = iter;
  model->set_threshold(0.0);
  model->set_training_scores(model->score_columns(xtrain), false);
  return model;
}

std::vector<double> OneClassSvm::decision_function(const Matrix& x) const {
  auto scores = score(x);
  for (double& s : scores) s = -s;
  return scores;
}

std::vector<double> OneClassSvm::score_columns(const Matrix& x) const {
  std::vector<double> scores(x.cols());
  parallel_for(x.cols(), [&](std::size_t c) {
    const auto xc = x.col(c);
    double sum = 0.0;
    for (std::size_t s = 0; s < support_.cols(); ++s) {
      sum += support_alpha_[s] * rbf(support_.col(s), xc, gamma_);
    }
    scores[c] = rho_ - sum;
  });
  return scores;
}

nlohmann::json OneClassSvm::state_to_json() const {
  return {{"gamma", gamma_},
          {"rho", rho_},
          {"support_rows", support_.rows()},
          {"support_cols", support_.cols()},
          {"support", std::vector<double>(support_.data().begin(), support_.data().end())},
          {"alpha", support_alpha_},
          {"gap", gap_},
          {"iterations", iterations_}};
}

std::unique_ptr<OneClassSvm> OneClassSvm::from_state(const DetectorParams& params,
                                                     std::size_t dimension,
                                                     const nlohmann::json& state) {
  std::unique_ptr<OneClassSvm> model(new OneClassSvm(params, dimension));
  model->gamma_ = state.at("gamma").get<double>();
  model->rho_ = state.at("rho").get<double>();
  const auto rows = state.at("support_rows").get<std::size_t>();
  const auto cols = state.at("support_cols").get<std::size_t>();
  const auto data = state.at("support").get<std::vector<double>>();
  model->support_alpha_ = state.at("alpha").get<std::vector<double>>();
  if (rows != dimension || data.size() != rows * cols || model->support_alpha_.size() != cols) {
    throw DataError("ocsvm: inconsistent stored support vectors");
  }
  model->support_ = Matrix(rows, cols);
  for (std::size_t c = 0; c < cols; ++c) {
    std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(c * rows), rows,
                model->support_.col(c).begin());
  }
  model->gap_ = state.value("gap", 0.0);
  model->iterations_ = state.value("iterations", std::size_t{0});
  return model;
}

}  // namespace flowgraph
