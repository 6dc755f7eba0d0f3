#include "microsynth/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "microsynth/errors.hpp"
#include "microsynth/parallel.hpp"

namespace microsynth {

void TreeParams::validate() const {
  if (min_leaf < 1) throw ConfigError("tree params: min_leaf must be >= 1");
  if (max_depth < 1) throw ConfigError("tree params: max_depth must be >= 1");
  if (!(min_impurity_decrease >= 0.0) || !std::isfinite(min_impurity_decrease)) {
    throw ConfigError("tree params: min_impurity_decrease must be finite and >= 0");
  }
  if (max_numeric_split_candidates < 1) {
    throw ConfigError("tree params: max_numeric_split_candidates must be >= 1");
  }
}

namespace {

struct NodeStats {
  double W = 0.0;   // total weight
  std::size_t n = 0;
  // Categorical target: per-class mass and sum of squared masses.
  std::vector<double> masses;
  // Numeric target: weighted sum, sum of squares, value range.
  double S = 0.0;
  double Q = 0.0;
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();
};

// Candidate split; `better` realizes the deterministic preference order:
// larger decrease, then fewer left rows, then earlier predictor. Scan order
// within one predictor makes further ties impossible (left counts are
// strictly increasing along thresholds and prefixes).
struct Candidate {
  bool valid = false;
  double decrease = -std::numeric_limits<double>::infinity();
  std::size_t left_n = 0;
  std::size_t pred_pos = static_cast<std::size_t>(-1);
  SplitRule rule;
};

bool better(const Candidate& a, const Candidate& b) {
  if (!a.valid || !b.valid) return a.valid;
  if (a.decrease != b.decrease) return a.decrease > b.decrease;
  if (a.left_n != b.left_n) return a.left_n < b.left_n;
  return a.pred_pos < b.pred_pos;
}

class TreeFitter {
 public:
  TreeFitter(const Table& t, std::int32_t target_col,
             std::vector<std::int32_t> pred_cols, const TreeParams& params,
             bool weighted)
      : t_(t),
        target_col_(target_col),
        pred_cols_(std::move(pred_cols)),
        params_(params),
        weighted_(weighted),
        target_numeric_(t.is_numeric(static_cast<std::size_t>(target_col))) {
    if (target_numeric_) {
      tnum_ = &t.numeric(static_cast<std::size_t>(target_col));
    } else {
      tcat_ = &t.categorical(static_cast<std::size_t>(target_col));
      n_classes_ = t.schema(static_cast<std::size_t>(target_col)).categories.size();
    }
  }

  std::vector<TreeNode> run() {
    std::vector<std::uint32_t> rows(t_.n_rows());
    for (std::size_t r = 0; r < rows.size(); ++r) rows[r] = static_cast<std::uint32_t>(r);
    build(std::move(rows), 0);
    return std::move(nodes_);
  }

 private:
  double w(std::uint32_t r) const { return weighted_ ? t_.weight(r) : 1.0; }

  NodeStats stats(const std::vector<std::uint32_t>& rows) const {
    NodeStats st;
    st.n = rows.size();
    if (target_numeric_) {
      for (auto r : rows) {
        const double x = (*tnum_)[r];
        const double wr = w(r);
        st.W += wr;
        st.S += wr * x;
        st.Q += wr * x * x;
        st.min = std::min(st.min, x);
        st.max = std::max(st.max, x);
      }
    } else {
      st.masses.assign(n_classes_, 0.0);
      for (auto r : rows) {
        const double wr = w(r);
        st.W += wr;
        st.masses[static_cast<std::size_t>((*tcat_)[r])] += wr;
      }
    }
    return st;
  }

  // Impurity: variance for numeric targets, Gini for categorical. Exact zero
  // for constant nodes (range check / single-class mass identity).
  double impurity(const NodeStats& st) const {
    if (st.W <= 0.0) return 0.0;
    if (target_numeric_) {
      if (st.min == st.max) return 0.0;
      const double var = (st.Q - st.S * st.S / st.W) / st.W;
      return var > 0.0 ? var : 0.0;
    }
    double s2 = 0.0;
    for (double m : st.masses) s2 += m * m;
    const double g = 1.0 - s2 / (st.W * st.W);
    return g > 0.0 ? g : 0.0;
  }

  // Weighted child impurity term; the split decrease is
  // parent_impurity - (W_l*I_l + W_r*I_r) / W_parent.
  struct Accum {
    double W = 0.0, S = 0.0, Q = 0.0, S2 = 0.0;
    std::vector<double> masses;
  };

  double child_term(const Accum& a) const {
    if (a.W <= 0.0) return 0.0;
    if (target_numeric_) {
      const double v = a.Q - a.S * a.S / a.W;  // = W * variance
      return v > 0.0 ? v : 0.0;
    }
    const double g = a.W - a.S2 / a.W;  // = W * gini
    return g > 0.0 ? g : 0.0;
  }

  void add_row(Accum& a, std::uint32_t r) const {
    const double wr = w(r);
    a.W += wr;
    if (target_numeric_) {
      const double x = (*tnum_)[r];
      a.S += wr * x;
      a.Q += wr * x * x;
    } else {
      double& m = a.masses[static_cast<std::size_t>((*tcat_)[r])];
      a.S2 += wr * (2.0 * m + wr);
      m += wr;
    }
  }

  Candidate scan_numeric(const std::vector<std::uint32_t>& rows, std::size_t pred_pos,
                         const NodeStats& parent, double parent_impurity) const {
    const auto col = static_cast<std::size_t>(pred_cols_[pred_pos]);
    const auto& xs = t_.numeric(col);
    std::vector<std::uint32_t> order(rows);
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
      const double xa = xs[a], xb = xs[b];
      if (std::isnan(xb)) return !std::isnan(xa);
      if (std::isnan(xa)) return false;
      return xa < xb;
    });
    std::size_t n_finite = order.size();
    while (n_finite > 0 && std::isnan(xs[order[n_finite - 1]])) --n_finite;
    if (n_finite == 0) return {};

    // Boundary i splits [0..i] from [i+1..): between distinct finite values,
    // or between the finite prefix and the NaN tail.
    std::vector<std::size_t> bounds;
    for (std::size_t i = 0; i + 1 < n_finite; ++i) {
      if (xs[order[i]] < xs[order[i + 1]]) bounds.push_back(i);
    }
    if (n_finite < order.size()) bounds.push_back(n_finite - 1);
    if (bounds.empty()) return {};
    if (bounds.size() > params_.max_numeric_split_candidates) {
      std::vector<std::size_t> picked;
      picked.reserve(params_.max_numeric_split_candidates);
      const std::size_t m = params_.max_numeric_split_candidates;
      for (std::size_t j = 0; j < m; ++j) {
        picked.push_back(bounds[(j + 1) * bounds.size() / (m + 1)]);
      }
      picked.erase(std::unique(picked.begin(), picked.end()), picked.end());
      bounds = std::move(picked);
    }

    Candidate best;
    Accum left;
    if (!target_numeric_) left.masses.assign(n_classes_, 0.0);
    std::size_t next = 0;
    for (std::size_t i = 0; i < order.size() && next < bounds.size(); ++i) {
      add_row(left, order[i]);
      if (i != bounds[next]) continue;
      ++next;
      const std::size_t left_n = i + 1;
      const std::size_t right_n = order.size() - left_n;
      if (left_n < params_.min_leaf || right_n < params_.min_leaf) continue;
      Accum right;
      right.W = parent.W - left.W;
      if (target_numeric_) {
        right.S = parent.S - left.S;
        right.Q = parent.Q - left.Q;
      } else {
        right.masses.resize(n_classes_);
        right.S2 = 0.0;
        for (std::size_t k = 0; k < n_classes_; ++k) {
          const double m = parent.masses[k] - left.masses[k];
          right.masses[k] = m;
          right.S2 += m * m;
        }
      }
      const double dec =
          parent_impurity - (child_term(left) + child_term(right)) / parent.W;
      Candidate c;
      c.valid = true;
      c.decrease = dec;
      c.left_n = left_n;
      c.pred_pos = pred_pos;
      c.rule.predictor = pred_cols_[pred_pos];
      c.rule.numeric = true;
      const double lo = xs[order[i]];
      if (i + 1 < n_finite) {
        const double hi = xs[order[i + 1]];
        double mid = lo + (hi - lo) / 2.0;
        if (!(mid < hi)) mid = lo;  // adjacent doubles: fall back to x <= lo
        c.rule.threshold = mid;
      } else {
        c.rule.threshold = lo;  // finite prefix left, NaN tail right
      }
      if (better(c, best)) best = std::move(c);
    }
    return best;
  }

  Candidate scan_categorical(const std::vector<std::uint32_t>& rows, std::size_t pred_pos,
                             const NodeStats& parent, double parent_impurity) const {
    const auto col = static_cast<std::size_t>(pred_cols_[pred_pos]);
    const auto& xs = t_.categorical(col);
    const std::size_t n_cats = t_.schema(col).categories.size();

    std::vector<double> cat_w(n_cats, 0.0);
    std::vector<double> cat_s(n_cats, 0.0);
    std::vector<double> cat_q(n_cats, 0.0);
    std::vector<std::size_t> cat_n(n_cats, 0);
    std::vector<double> cat_mass;  // n_cats x n_classes, categorical target
    if (!target_numeric_) cat_mass.assign(n_cats * n_classes_, 0.0);
    for (auto r : rows) {
      const auto c = static_cast<std::size_t>(xs[r]);
      const double wr = w(r);
      cat_w[c] += wr;
      ++cat_n[c];
      if (target_numeric_) {
        const double x = (*tnum_)[r];
        cat_s[c] += wr * x;
        cat_q[c] += wr * x * x;
      } else {
        cat_mass[c * n_classes_ + static_cast<std::size_t>((*tcat_)[r])] += wr;
      }
    }

    std::vector<std::int32_t> present;
    for (std::size_t c = 0; c < n_cats; ++c) {
      if (cat_n[c] > 0) present.push_back(static_cast<std::int32_t>(c));
    }
    if (present.size() < 2) return {};

    // Order categories by mean target (numeric) or by the within-category
    // share of the node's majority class, then scan contiguous prefixes.
    std::size_t maj = 0;
    if (!target_numeric_) {
      for (std::size_t k = 1; k < n_classes_; ++k) {
        if (parent.masses[k] > parent.masses[maj]) maj = k;
      }
    }
    auto key = [&](std::int32_t c) {
      const auto cc = static_cast<std::size_t>(c);
      if (target_numeric_) return cat_s[cc] / cat_w[cc];
      return cat_mass[cc * n_classes_ + maj] / cat_w[cc];
    };
    std::stable_sort(present.begin(), present.end(), [&](std::int32_t a, std::int32_t b) {
      const double ka = key(a), kb = key(b);
      if (ka != kb) return ka < kb;
      return a < b;
    });

    Candidate best;
    Accum left;
    if (!target_numeric_) left.masses.assign(n_classes_, 0.0);
    std::size_t left_n = 0;
    for (std::size_t p = 0; p + 1 < present.size(); ++p) {
      const auto cc = static_cast<std::size_t>(present[p]);
      left.W += cat_w[cc];
      left_n += cat_n[cc];
      if (target_numeric_) {
        left.S += cat_s[cc];
        left.Q += cat_q[cc];
      } else {
        for (std::size_t k = 0; k < n_classes_; ++k) {
          const double add = cat_mass[cc * n_classes_ + k];
          double& m = left.masses[k];
          left.S2 += add * (2.0 * m + add);
          m += add;
        }
      }
      const std::size_t right_n = rows.size() - left_n;
      if (left_n < params_.min_leaf || right_n < params_.min_leaf) continue;
      Candidate c;
      c.valid = true;
      c.left_n = left_n;
      c.pred_pos = pred_pos;
      c.rule.predictor = pred_cols_[pred_pos];
      c.rule.numeric = false;
      c.rule.left_set.assign(present.begin(), present.begin() + static_cast<std::ptrdiff_t>(p) + 1);
      std::sort(c.rule.left_set.begin(), c.rule.left_set.end());
      if (target_numeric_) {
        Accum right;
        right.W = parent.W - left.W;
        right.S = parent.S - left.S;
        right.Q = parent.Q - left.Q;
        c.decrease = parent_impurity - (child_term(left) + child_term(right)) / parent.W;
      } else {
        Accum right;
        right.W = parent.W - left.W;
        right.masses.resize(n_classes_);
        right.S2 = 0.0;
        for (std::size_t k = 0; k < n_classes_; ++k) {
          const double m = parent.masses[k] - left.masses[k];
          right.masses[k] = m;
          right.S2 += m * m;
        }
        c.decrease = parent_impurity - (child_term(left) + child_term(right)) / parent.W;
      }
      if (better(c, best)) best = std::move(c);
    }
    return best;
  }

  std::int32_t make_leaf(std::vector<std::uint32_t> rows) {
    TreeNode leaf;
    leaf.is_leaf = true;
    if (weighted_) {
      leaf.donor_cum_weights.reserve(rows.size());
      double acc = 0.0;
      for (auto r : rows) {
        acc += t_.weight(r);
        leaf.donor_cum_weights.push_back(acc);
      }
    }
    leaf.donor_rows = std::move(rows);
    nodes_.push_back(std::move(leaf));
    return static_cast<std::int32_t>(nodes_.size() - 1);
  }

  std::int32_t build(std::vector<std::uint32_t> rows, std::size_t depth) {
    const NodeStats st = stats(rows);
    const double node_impurity = impurity(st);
    Candidate best;
    if (depth < params_.max_depth && rows.size() >= 2 * params_.min_leaf &&
        node_impurity > 0.0) {
      std::vector<Candidate> per_pred(pred_cols_.size());
      parallel_for(static_cast<std::int64_t>(pred_cols_.size()),
                   [&](std::int64_t lo, std::int64_t hi) {
                     for (std::int64_t p = lo; p < hi; ++p) {
                       const auto pos = static_cast<std::size_t>(p);
                       per_pred[pos] =
                           t_.is_numeric(static_cast<std::size_t>(pred_cols_[pos]))
                               ? scan_numeric(rows, pos, st, node_impurity)
                               : scan_categorical(rows, pos, st, node_impurity);
                     }
                   });
      for (auto& c : per_pred) {
        if (better(c, best)) best = std::move(c);
      }
    }
    if (!best.valid || best.decrease <= params_.min_impurity_decrease) {
      return make_leaf(std::move(rows));
    }

    std::vector<std::uint32_t> left_rows, right_rows;
    left_rows.reserve(best.left_n);
    right_rows.reserve(rows.size() - best.left_n);
    if (best.rule.numeric) {
      const auto& xs = t_.numeric(static_cast<std::size_t>(best.rule.predictor));
      for (auto r : rows) {
        (xs[r] <= best.rule.threshold ? left_rows : right_rows).push_back(r);
      }
    } else {
      const auto& xs = t_.categorical(static_cast<std::size_t>(best.rule.predictor));
      for (auto r : rows) {
        const bool in = std::binary_search(best.rule.left_set.begin(),
                                           best.rule.left_set.end(), xs[r]);
        (in ? left_rows : right_rows).push_back(r);
      }
    }
    rows.clear();
    rows.shrink_to_fit();

    const auto idx = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();
    const auto left = build(std::move(left_rows), depth + 1);
    const auto right = build(std::move(right_rows), depth + 1);
    TreeNode& node = nodes_[static_cast<std::size_t>(idx)];
    node.is_leaf = false;
    node.split = std::move(best.rule);
    node.left = left;
    node.right = right;
    return idx;
  }

  const Table& t_;
  std::int32_t target_col_;
  std::vector<std::int32_t> pred_cols_;
  TreeParams params_;
  bool weighted_;
  bool target_numeric_;
  const CategoricalColumn* tcat_ = nullptr;
  const NumericColumn* tnum_ = nullptr;
  std::size_t n_classes_ = 0;
  std::vector<TreeNode> nodes_;
};

}  // namespace

DecisionTree fit_tree(const Table& t, const std::string& target,
                      const std::vector<std::string>& predictors,
                      const TreeParams& params, bool weighted) {
  params.validate();
  if (weighted && !t.weighted()) {
    throw ConfigError("weighted tree fit requested but the table has no weight column");
  }
  DecisionTree tree;
  tree.target = target;
  tree.target_col = t.require_column(target);
  tree.predictors = predictors;
  tree.params = params;
  tree.weighted = weighted;
  for (const auto& p : predictors) {
    const int col = t.require_column(p);
    if (p == target) throw ConfigError("tree predictor list contains the target '" + p + "'");
    for (auto seen : tree.predictor_cols) {
      if (seen == col) throw ConfigError("duplicate tree predictor '" + p + "'");
    }
    tree.predictor_cols.push_back(col);
  }
  if (t.n_rows() == 0) throw DataError("cannot fit a tree on an empty table");
  if (t.n_rows() < params.min_leaf) {
    throw DataError("tree target '" + target + "': " + std::to_string(t.n_rows()) +
                    " rows is below min_leaf " + std::to_string(params.min_leaf));
  }
  if (t.is_numeric(static_cast<std::size_t>(tree.target_col))) {
    const auto& xs = t.numeric(static_cast<std::size_t>(tree.target_col));
    for (std::size_t r = 0; r < xs.size(); ++r) {
      if (!std::isfinite(xs[r])) {
        throw DataError("tree target '" + target + "' is not finite at row " +
                        std::to_string(r));
      }
    }
  }

  TreeFitter fitter(t, tree.target_col, tree.predictor_cols, params, weighted);
  tree.nodes = fitter.run();
  return tree;
}

std::int32_t route_to_leaf(const DecisionTree& tree, const Table& t, std::size_t row) {
  return route_to_leaf(
      tree,
      [&](std::int32_t col) { return t.categorical(static_cast<std::size_t>(col))[row]; },
      [&](std::int32_t col) { return t.numeric(static_cast<std::size_t>(col))[row]; });
}

std::uint32_t sample_from_leaf(const DecisionTree& tree, std::int32_t leaf, RngStream& rng) {
  const TreeNode& node = tree.nodes.at(static_cast<std::size_t>(leaf));
  if (!node.is_leaf) throw ConfigError("sample_from_leaf: node is not a leaf");
  if (node.donor_rows.empty()) throw ConfigError("sample_from_leaf: empty donor pool");
  if (node.donor_cum_weights.empty()) {
    return node.donor_rows[rng.next_below(node.donor_rows.size())];
  }
  const double u = rng.next_unit() * node.donor_cum_weights.back();
  return node.donor_rows[pick_by_cumulative_weight(node.donor_cum_weights, u)];
}

}  // namespace microsynth
