#include "flowgraph/iforest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flowgraph/error.hpp"
#include "flowgraph/parallel.hpp"
#include "flowgraph/random.hpp"

namespace flowgraph {
namespace {

constexpr double kEulerGamma = 0.57721566490153286061;

class TreeGrower {
 public:
  TreeGrower(const Matrix& x, std::size_t height_limit, Rng& rng)
      : x_(x), height_limit_(height_limit), rng_(rng) {}

  IsolationForest::Tree grow(std::vector<std::size_t> sample) {
    IsolationForest::Tree tree;
    tree.reserve(2 * sample.size());
    build(tree, sample, 0, sample.size(), 0);
    return tree;
  }

 private:
  std::int32_t build(IsolationForest::Tree& tree, std::vector<std::size_t>& idx,
                     std::size_t begin, std::size_t end, std::size_t depth) {
    const auto self = static_cast<std::int32_t>(tree.size());
    tree.emplace_back();
    const std::size_t size = end - begin;
    if (depth >= height_limit_ || size <= 1) {
      tree[self].size = size;
      return self;
    }

    // Only attributes that vary within the node can split it.
    candidates_.clear();
    lo_.clear();
    hi_.clear();
    for (std::size_t f = 0; f < x_.rows(); ++f) {
      double lo = x_(f, idx[begin]);
      double hi = lo;
      for (std::size_t k = begin + 1; k < end; ++k) {
        const double v = x_(f, idx[k]);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (lo < hi) {
        candidates_.push_back(f);
        lo_.push_back(lo);
        hi_.push_back(hi);
      }
    }
    if (candidates_.empty()) {
      tree[self].size = size;
      return self;
    }

    const std::size_t pick = uniform_index(rng_, candidates_.size());
    const std::size_t feature = candidates_[pick];
    const double split = uniform_real(rng_, lo_[pick], hi_[pick]);
    auto mid = std::partition(idx.begin() + static_cast<std::ptrdiff_t>(begin),
                              idx.begin() + static_cast<std::ptrdiff_t>(end),
                              [&](std::size_t c) { return x_(feature, c) < split; });
    const auto mid_pos = static_cast<std::size_t>(mid - idx.begin());

    tree[self].feature = static_cast<std::int32_t>(feature);
    tree[self].split = split;
    const auto left = build(tree, idx, begin, mid_pos, depth + 1);
    const auto right = build(tree, idx, mid_pos, end, depth + 1);
    tree[self].left = left;
    tree[self].right = right;
    return self;
  }

  const Matrix& x_;
  std::size_t height_limit_;
  Rng& rng_;
  std::vector<std::size_t> candidates_;
  std::vector<double> lo_;
  std::vector<double> hi_;
};

double path_length(const IsolationForest::Tree& tree, std::span<const double> x) {
  std::size_t depth = 0;
  std::int32_t node = 0;
  while (tree[static_cast<std::size_t>(node)].feature >= 0) {
    const auto& n = tree[static_cast<std::size_t>(node)];
    node = x[static_cast<std::size_t>(n.feature)] < n.split ? n.left : n.right;
    ++depth;
  }
  return static_cast<double>(depth) + average_path_length(tree[static_cast<std::size_t>(node)].size);
}

}  // namespace

double harmonic_number(std::size_t i) {
  if (i == 0) return 0.0;
  if (i <= 1024) {
    double sum = 0.0;
    for (std::size_t k = i; k >= 1; --k) sum += 1.0 / static_cast<double>(k);
    return sum;
  }
  const double n = static_cast<double>(i);
  return std::log(n) + kEulerGamma + 1.0 / (2.0 * n) - 1.0 / (12.0 * n * n);
}

double average_path_length(std::size_t n) {
  if (n <= 1) return 0.0;
  const double size = static_cast<double>(n);
  return 2.0 * harmonic_number(n - 1) - 2.0 * (size - 1.0) / size;
}

std::unique_ptr<IsolationForest> IsolationForest::fit(const Matrix& xtrain,
                                                      const DetectorParams& params) {
  params.validate();
  if (params.kind != DetectorKind::iforest) throw ArgumentError("iforest: wrong parameter kind");
  if (xtrain.cols() < 2) throw FitError("iforest: need at least 2 training samples");
  if (xtrain.rows() < 1) throw FitError("iforest: need at least 1 feature");

  std::unique_ptr<IsolationForest> model(new IsolationForest(params, xtrain.rows()));
  const std::size_t total = xtrain.cols();
  model->sample_size_ = std::min(params.subsample, total);
  const auto height_limit =
      static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(model->sample_size_))));

  model->trees_.resize(params.n_trees);
  parallel_for(params.n_trees, [&](std::size_t t) {
    Rng rng(derive_seed(params.seed, t));
    // Partial Fisher-Yates draws the subsample without replacement.
    std::vector<std::size_t> pool(total);
    std::iota(pool.begin(), pool.end(), 0);
    for (std::size_t k = 0; k < model->sample_size_; ++k) {
      std::swap(pool[k], pool[k + uniform_index(rng, total - k)]);
    }
    pool.resize(model->sample_size_);
    TreeGrower grower(xtrain, height_limit, rng);
    model->trees_[t] = grower.grow(std::move(pool));
  });

  model->set_training_scores(model->score_columns(xtrain));
  return model;
}

double IsolationForest::expected_path_length(std::span<const double> x) const {
  double sum = 0.0;
  for (const auto& tree : trees_) sum += path_length(tree, x);
  return sum / static_cast<double>(trees_.size());
}

std::vector<double> IsolationForest::score_columns(const Matrix& x) const {
  const double norm = average_path_length(sample_size_);
  std::vector<double> scores(x.cols());
  parallel_for(x.cols(), [&](std::size_t c) {
    scores[c] = std::exp2(-expected_path_length(x.col(c)) / norm);
  });
  return scores;
}

nlohmann::json IsolationForest::state_to_json() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& tree : trees_) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : tree) nodes.push_back({n.feature, n.split, n.left, n.right, n.size});
    trees.push_back(std::move(nodes));
  }
  return {{"sample_size", sample_size_}, {"trees", std::move(trees)}};
}

std::unique_ptr<IsolationForest> IsolationForest::from_state(const DetectorParams& params,
                                                             std::size_t dimension,
                                                             const nlohmann::json& state) {
  std::unique_ptr<IsolationForest> model(new IsolationForest(params, dimension));
  model->sample_size_ = state.at("sample_size").get<std::size_t>();
  for (const auto& nodes : state.at("trees")) {
    Tree tree;
    for (const auto& n : nodes) {
      Node node;
      node.feature = n.at(0).get<std::int32_t>();
      node.split = n.at(1).get<double>();
      node.left = n.at(2).get<std::int32_t>();
      node.right = n.at(3).get<std::int32_t>();
      node.size = n.at(4).get<std::size_t>();
      if (node.feature >= static_cast<std::int32_t>(dimension)) {
        throw DataError("iforest: split feature out of range");
      }
      tree.push_back(node);
    }
    if (tree.empty()) throw DataError("iforest: empty tree");
    model->trees_.push_back(std::move(tree));
  }
  if (model->trees_.empty()) throw DataError("iforest: no trees");
  return model;
}

}  // namespace flowgraph
