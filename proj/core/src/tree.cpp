#include "hotspot/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hotspot/error.hpp"

namespace hotspot {

std::size_t DecisionTree::depth() const {
  if (nodes_.empty()) return 0;
  std::vector<std::pair<std::int32_t, std::size_t>> stack{{0, 0}};
  std::size_t best = 0;
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    const auto& n = nodes_[static_cast<std::size_t>(i)];
    best = std::max(best, d);
    if (n.feature >= 0) {
      stack.emplace_back(n.left, d + 1);
      stack.emplace_back(n.right, d + 1);
    }
  }
  return best;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const auto& n) { return n.feature < 0; }));
}

TreeBuilder::TreeBuilder(MatrixView X, std::span<const std::uint8_t> y) : X_(X), y_(y), order_(X.cols()) {
  if (X.rows() != y.size()) throw DataError("feature rows and labels differ");
  if (X.rows() > UINT32_MAX) throw DataError("too many rows for the tree builder");
  for (std::size_t f = 0; f < X.cols(); ++f) {
    auto& ord = order_[f];
    ord.resize(X.rows());
    std::iota(ord.begin(), ord.end(), 0U);
    std::stable_sort(ord.begin(), ord.end(), [&](std::uint32_t a, std::uint32_t b) { return X(a, f) < X(b, f); });
  }
}

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double impurity = 0.0;  // weighted child impurity, lower is better
};

/// Weighted Gini mass: W * 2 p (1 - p) with p = pos / W.
inline double gini_mass(double pos, double total) {
  return total > 0.0 ? 2.0 * pos * (total - pos) / total : 0.0;
}

struct Frame {
  std::vector<std::uint32_t> rows;
  std::int32_t node;
  int depth;
};

}  // namespace

DecisionTree TreeBuilder::grow(std::span<const double> weights, const TreeParams& params, Rng& rng) const {
  const std::size_t n_rows = X_.rows();
  const std::size_t n_features = X_.cols();
  if (weights.size() != n_rows) throw DataError("weight vector length differs from the training rows");
  if (n_features == 0) throw DataError("cannot grow a tree without features");

  std::vector<std::uint32_t> root;
  root.reserve(n_rows);
  for (std::uint32_t i = 0; i < n_rows; ++i)
    if (weights[i] > 0.0) root.push_back(i);
  if (root.empty()) throw DataError("all training weights are zero");

  const int max_features = params.max_features <= 0 ? static_cast<int>(n_features)
                                                     : std::min<int>(params.max_features, static_cast<int>(n_features));
  const std::size_t min_leaf = static_cast<std::size_t>(std::max(1, params.min_samples_leaf));

  std::vector<TreeNode> nodes(1);
  std::vector<std::uint32_t> stamp(n_rows, 0);
  std::uint32_t next_stamp = 0;
  std::vector<std::pair<double, std::uint32_t>> sorted;
  std::vector<std::uint32_t> features(n_features);
  std::iota(features.begin(), features.end(), 0U);
  const double full_log = static_cast<double>(n_rows);

  std::vector<Frame> stack;
  stack.push_back({std::move(root), 0, 0});
  while (!stack.empty()) {
    Frame fr = std::move(stack.back());
    stack.pop_back();
    auto& rows = fr.rows;

    double total = 0.0, pos = 0.0;
    for (auto r : rows) {
      total += weights[r];
      if (y_[r]) pos += weights[r];
    }
    nodes[static_cast<std::size_t>(fr.node)].value = total > 0.0 ? pos / total : 0.0;

    const bool pure = pos <= 0.0 || pos >= total;
    const bool depth_capped = params.max_depth > 0 && fr.depth >= params.max_depth;
    if (pure || depth_capped || rows.size() < 2 * min_leaf) continue;

    // An impure node takes its best valid split even without a Gini decrease (XOR needs it).
    Split best;
    best.impurity = std::numeric_limits<double>::infinity();
    bool found = false;

    const std::size_t n = rows.size();
    const bool use_global = static_cast<double>(n) * std::log2(static_cast<double>(n) + 1.0) > full_log;
    if (use_global) {
      ++next_stamp;
      for (auto r : rows) stamp[r] = next_stamp;
    }

    shuffle(features.begin(), features.end(), rng);
    int examined = 0;
    for (std::size_t fi = 0; fi < n_features && examined < max_features; ++fi) {
      const auto f = features[fi];
      sorted.clear();
      if (use_global) {
        for (auto r : order_[f])
          if (stamp[r] == next_stamp) sorted.emplace_back(X_(r, f), r);
      } else {
        for (auto r : rows) sorted.emplace_back(X_(r, f), r);
        std::sort(sorted.begin(), sorted.end());
      }
      if (sorted.front().first == sorted.back().first) continue;  // constant here; does not count
      ++examined;

      double left_w = 0.0, left_pos = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const auto r = sorted[i].second;
        left_w += weights[r];
        if (y_[r]) left_pos += weights[r];
        const double v = sorted[i].first, next = sorted[i + 1].first;
        if (v == next) continue;
        if (i + 1 < min_leaf || n - i - 1 < min_leaf) continue;
        const double impurity = gini_mass(left_pos, left_w) + gini_mass(pos - left_pos, total - left_w);
        if (impurity < best.impurity - 1e-12 * total) {
          double threshold = v + (next - v) / 2.0;
          if (!(threshold < next)) threshold = v;
          best = {static_cast<int>(f), threshold, impurity};
          found = true;
        }
      }
    }
    if (!found) continue;

    std::vector<std::uint32_t> left, right;
    for (auto r : rows) (X_(r, static_cast<std::size_t>(best.feature)) <= best.threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    const auto left_id = static_cast<std::int32_t>(nodes.size());
    nodes.emplace_back();
    const auto right_id = static_cast<std::int32_t>(nodes.size());
    nodes.emplace_back();
    auto& node = nodes[static_cast<std::size_t>(fr.node)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = left_id;
    node.right = right_id;
    stack.push_back({std::move(right), right_id, fr.depth + 1});
    stack.push_back({std::move(left), left_id, fr.depth + 1});
  }
  return DecisionTree(std::move(nodes));
}

}  // namespace hotspot
