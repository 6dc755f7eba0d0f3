#pragma once

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <string>
#include <vector>

#include "microsynth/rng.hpp"
#include "microsynth/table.hpp"

namespace microsynth {

struct TreeParams {
  std::size_t min_leaf = 5;  // privacy floor: no leaf donor pool smaller
  std::size_t max_depth = 30;
  double min_impurity_decrease = 0.0;
  std::size_t max_numeric_split_candidates = 256;

  void validate() const;
};

// Internal-node routing test. Numeric: left iff x <= threshold (NaN goes
// right). Categorical: left iff the code is in left_set; codes never seen in
// any training split, and codes outside left_set, go right.
struct SplitRule {
  std::int32_t predictor = -1;  // column index in the fitting table
  bool numeric = false;
  double threshold = 0.0;
  std::vector<std::int32_t> left_set;  // sorted
};

struct TreeNode {
  bool is_leaf = true;
  SplitRule split;
  std::int32_t left = -1;
  std::int32_t right = -1;
  // Leaf donor pool: fitting-table row indices, ascending.
  std::vector<std::uint32_t> donor_rows;
  // Cumulative donor weights; empty when the fit is unweighted.
  std::vector<double> donor_cum_weights;
};

struct DecisionTree {
  std::string target;
  std::int32_t target_col = -1;
  std::vector<std::string> predictors;
  std::vector<std::int32_t> predictor_cols;
  TreeParams params;
  bool weighted = false;
  std::vector<TreeNode> nodes;  // nodes[0] is the root; always nonempty

  std::size_t n_leaves() const {
    std::size_t k = 0;
    for (const auto& n : nodes) k += n.is_leaf ? 1 : 0;
    return k;
  }
};

// Greedy CART fit of `target` on `predictors` over the whole table.
// Impurity: Gini for categorical targets, variance for numeric. A split is
// kept only when both children hold >= min_leaf rows and the weighted
// impurity decrease exceeds min_impurity_decrease. An empty predictor list
// produces a single-leaf tree whose pool is every row (the bootstrap case).
// Numeric target cells must be finite.
DecisionTree fit_tree(const Table& t, const std::string& target,
                      const std::vector<std::string>& predictors,
                      const TreeParams& params, bool weighted);

// Descends split rules reading predictor values from callables indexed by
// fitting-table column: cat_at(col) -> int32 code, num_at(col) -> double.
template <class CatFn, class NumFn>
  requires std::invocable<CatFn&, std::int32_t> && std::invocable<NumFn&, std::int32_t>
std::int32_t route_to_leaf(const DecisionTree& tree, CatFn&& cat_at, NumFn&& num_at) {
  std::int32_t node = 0;
  while (!tree.nodes[static_cast<std::size_t>(node)].is_leaf) {
    const TreeNode& n = tree.nodes[static_cast<std::size_t>(node)];
    bool go_left;
    if (n.split.numeric) {
      const double x = num_at(n.split.predictor);
      go_left = x <= n.split.threshold;  // NaN compares false: right
    } else {
      const std::int32_t c = cat_at(n.split.predictor);
      go_left = std::binary_search(n.split.left_set.begin(), n.split.left_set.end(), c);
    }
    node = go_left ? n.left : n.right;
  }
  return node;
}

// Routes row `row` of a table laid out like the fitting table.
std::int32_t route_to_leaf(const DecisionTree& tree, const Table& t, std::size_t row);

// Draws a donor row index from the leaf's pool: uniform over the multiset,
// or weight-proportional when the tree was fitted weighted.
std::uint32_t sample_from_leaf(const DecisionTree& tree, std::int32_t leaf, RngStream& rng);

}  // namespace microsynth
