#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "hotspot/matrix.hpp"
#include "hotspot/random.hpp"

namespace hotspot {

/// Flat binary tree. A node with feature < 0 is a leaf; `value` holds the weighted
/// positive-class frequency of the training rows that reached it.
struct TreeNode {
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;

  bool operator==(const TreeNode&) const = default;
};

class DecisionTree {
 public:
  DecisionTree() = default;
  explicit DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  /// Leaf value for a row; rows go left when x[feature] <= threshold.
  double predict(std::span<const double> x) const {
    std::int32_t i = 0;
    while (nodes_[static_cast<std::size_t>(i)].feature >= 0) {
      const auto& n = nodes_[static_cast<std::size_t>(i)];
      i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes_[static_cast<std::size_t>(i)].value;
  }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t depth() const;
  std::size_t leaf_count() const;

  bool operator==(const DecisionTree&) const = default;

 private:
  std::vector<TreeNode> nodes_;
};

struct TreeParams {
  int max_depth = 0;         // 0 = unlimited
  int min_samples_leaf = 1;  // distinct rows per child
  int max_features = -1;     // features examined per split; -1 = all
};

/// Grows weighted-Gini CART trees over one training matrix. Each feature is sorted once
/// up front; large nodes reuse that order, small nodes sort locally.
class TreeBuilder {
 public:
  TreeBuilder(MatrixView X, std::span<const std::uint8_t> y);

  /// Rows with zero weight are left out of the tree. Weights encode both sample weights
  /// and bootstrap multiplicities.
  DecisionTree grow(std::span<const double> weights, const TreeParams& params, Rng& rng) const;

  std::size_t rows() const { return X_.rows(); }
  std::size_t cols() const { return X_.cols(); }

 private:
  MatrixView X_;
  std::span<const std::uint8_t> y_;
  std::vector<std::vector<std::uint32_t>> order_;  // per feature, rows by ascending value
};

}  // namespace hotspot
