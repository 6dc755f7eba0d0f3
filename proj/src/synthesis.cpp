#include "microsynth/synthesis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "microsynth/errors.hpp"
#include "microsynth/parallel.hpp"
#include "microsynth/rng.hpp"

namespace microsynth {

namespace {

// Stream tags keep the per-purpose RNG streams disjoint.
constexpr std::uint64_t kTagCarry = 0xC1;
constexpr std::uint64_t kTagDraw = 0xD1;

constexpr int kRowRedrawLimit = 20;

// Predicate atom bound to original-table column indices, evaluated against
// a single in-progress synthetic row.
struct LiteAtom {
  std::int32_t col = -1;
  bool numeric = false;
  FilterOp op = FilterOp::eq;
  std::vector<std::int32_t> ids;  // sorted category ids
  double number = 0.0, lo = 0.0, hi = 0.0;
};

struct LiteRule {
  std::vector<LiteAtom> atoms;
  std::vector<std::size_t> resample_positions;  // visit positions, ascending
  int limit = 20;
};

struct RowBuf {
  std::vector<std::int32_t> cat;
  std::vector<double> num;
};

bool atom_holds(const LiteAtom& a, const RowBuf& buf) {
  if (a.numeric) {
    const double x = buf.num[static_cast<std::size_t>(a.col)];
    switch (a.op) {
      case FilterOp::eq: return x == a.number;
      case FilterOp::ne: return x != a.number;
      case FilterOp::in_range: return x >= a.lo && x <= a.hi;
      case FilterOp::not_in_range: return !(x >= a.lo && x <= a.hi);
      default: return false;
    }
  }
  const std::int32_t x = buf.cat[static_cast<std::size_t>(a.col)];
  const bool in = std::binary_search(a.ids.begin(), a.ids.end(), x);
  switch (a.op) {
    case FilterOp::eq:
    case FilterOp::in_set: return in;
    case FilterOp::ne:
    case FilterOp::not_in_set: return !in;
    default: return false;
  }
}

bool rule_holds(const LiteRule& r, const RowBuf& buf) {
  for (const auto& a : r.atoms) {
    if (!atom_holds(a, buf)) return false;
  }
  return true;
}

LiteAtom bind_atom(const Table& t, const FilterAtom& atom, const std::string& rule_name) {
  LiteAtom b;
  b.col = t.require_column(atom.column);
  b.numeric = t.is_numeric(static_cast<std::size_t>(b.col));
  b.op = atom.op;
  b.number = atom.number;
  b.lo = atom.lo;
  b.hi = atom.hi;
  if (b.numeric) {
    if (b.op == FilterOp::in_set || b.op == FilterOp::not_in_set) {
      throw ConfigError("consistency rule '" + rule_name + "': set predicate on numeric column '" +
                        atom.column + "'");
    }
    if ((b.op == FilterOp::eq || b.op == FilterOp::ne) && !atom.number_set) {
      throw ConfigError("consistency rule '" + rule_name + "': eq/ne on numeric column '" +
                        atom.column + "' needs a numeric operand");
    }
    if ((b.op == FilterOp::in_range || b.op == FilterOp::not_in_range) && !(b.lo <= b.hi)) {
      throw ConfigError("consistency rule '" + rule_name + "': range bounds out of order for '" +
                        atom.column + "'");
    }
  } else {
    const auto& sch = t.schema(static_cast<std::size_t>(b.col));
    if ((b.op == FilterOp::eq || b.op == FilterOp::ne) && atom.values.size() != 1) {
      throw ConfigError("consistency rule '" + rule_name + "': eq/ne on column '" + atom.column +
                        "' needs exactly one value");
    }
    if (b.op == FilterOp::in_range || b.op == FilterOp::not_in_range) {
      throw ConfigError("consistency rule '" + rule_name + "': range predicate on categorical column '" +
                        atom.column + "'");
    }
    for (const auto& v : atom.values) {
      const auto idx = sch.category_index(v);
      if (idx >= 0) b.ids.push_back(idx);
    }
    std::sort(b.ids.begin(), b.ids.end());
  }
  return b;
}

}  // namespace

SynthesisResult synthesize(const Table& t, const SynthesisConfig& cfg) {
  if (t.n_rows() == 0) throw DataError("cannot synthesize from an empty table");
  if (cfg.visit_order.empty()) throw ConfigError("synthesis visit_order is empty");
  if (cfg.weighted && !t.weighted()) {
    throw ConfigError("weighted synthesis requested but the input has no weight column");
  }
  cfg.default_params.validate();

  const std::size_t n_visit = cfg.visit_order.size();
  std::vector<ColumnPlan> plans = cfg.visit_order;
  std::vector<std::int32_t> plan_cols(n_visit);
  std::unordered_set<std::string> seen_names;
  std::vector<std::size_t> synth_positions;
  bool any_carry = false;
  for (std::size_t v = 0; v < n_visit; ++v) {
    auto& plan = plans[v];
    plan_cols[v] = t.require_column(plan.name);
    if (!seen_names.insert(plan.name).second) {
      throw ConfigError("column '" + plan.name + "' appears twice in visit_order");
    }
    if (!plan.params) plan.params = cfg.default_params;
    plan.params->validate();
    if (plan.mode == ColumnMode::synthesize) {
      synth_positions.push_back(v);
    } else {
      any_carry = true;
    }
  }

  // Position lookup for consistency-rule resample targets.
  auto visit_position = [&](const std::string& name) -> std::ptrdiff_t {
    for (std::size_t v = 0; v < n_visit; ++v) {
      if (plans[v].name == name) return static_cast<std::ptrdiff_t>(v);
    }
    return -1;
  };

  std::vector<LiteRule> rules;
  rules.reserve(cfg.consistency_rules.size());
  for (const auto& rule : cfg.consistency_rules) {
    LiteRule lr;
    lr.limit = rule.resample_limit;
    if (lr.limit < 1) {
      throw ConfigError("consistency rule '" + rule.name + "': resample limit must be >= 1");
    }
    if (rule.resample_columns.empty()) {
      throw ConfigError("consistency rule '" + rule.name + "' names no resample columns");
    }
    for (const auto& atom : rule.must_hold.atoms) {
      if (visit_position(atom.column) < 0) {
        throw ConfigError("consistency rule '" + rule.name + "' references column '" +
                          atom.column + "' outside visit_order");
      }
      lr.atoms.push_back(bind_atom(t, atom, rule.name));
    }
    for (const auto& name : rule.resample_columns) {
      const auto pos = visit_position(name);
      if (pos < 0) {
        throw ConfigError("consistency rule '" + rule.name + "' resamples column '" + name +
                          "' outside visit_order");
      }
      if (plans[static_cast<std::size_t>(pos)].mode != ColumnMode::synthesize) {
        throw ConfigError("consistency rule '" + rule.name + "' resamples carried column '" +
                          name + "'");
      }
      lr.resample_positions.push_back(static_cast<std::size_t>(pos));
    }
    std::sort(lr.resample_positions.begin(), lr.resample_positions.end());
    lr.resample_positions.erase(
        std::unique(lr.resample_positions.begin(), lr.resample_positions.end()),
        lr.resample_positions.end());
    rules.push_back(std::move(lr));
  }

  // Fit one tree per synthesized column; predictors are every earlier
  // synthesized column plus earlier carried columns that opted in.
  std::vector<DecisionTree> trees;  // indexed like synth_positions
  std::vector<std::ptrdiff_t> tree_of_position(n_visit, -1);
  trees.reserve(synth_positions.size());
  for (std::size_t v = 0; v < n_visit; ++v) {
    if (plans[v].mode != ColumnMode::synthesize) continue;
    std::vector<std::string> predictors;
    for (std::size_t u = 0; u < v; ++u) {
      if (plans[u].mode == ColumnMode::synthesize || plans[u].carry_as_predictor) {
        predictors.push_back(plans[u].name);
      }
    }
    tree_of_position[v] = static_cast<std::ptrdiff_t>(trees.size());
    trees.push_back(fit_tree(t, plans[v].name, predictors, *plans[v].params, cfg.weighted));
  }

  // Output storage.
  const std::size_t n_out = cfg.n_synthetic_rows;
  std::vector<ColumnSchema> out_schema;
  std::vector<ColumnData> out_columns;
  out_schema.reserve(n_visit);
  out_columns.reserve(n_visit);
  std::vector<CategoricalColumn*> out_cat(n_visit, nullptr);
  std::vector<NumericColumn*> out_num(n_visit, nullptr);
  for (std::size_t v = 0; v < n_visit; ++v) {
    const auto col = static_cast<std::size_t>(plan_cols[v]);
    out_schema.push_back(t.schema(col));
    if (t.is_numeric(col)) {
      out_columns.emplace_back(NumericColumn(n_out));
    } else {
      out_columns.emplace_back(CategoricalColumn(n_out));
    }
  }
  for (std::size_t v = 0; v < n_visit; ++v) {
    if (auto* c = std::get_if<CategoricalColumn>(&out_columns[v])) out_cat[v] = c;
    if (auto* x = std::get_if<NumericColumn>(&out_columns[v])) out_num[v] = x;
  }

  // Carry donors are weight-proportional when fitting is weighted.
  std::vector<double> carry_cum;
  if (any_carry && cfg.weighted) {
    carry_cum.reserve(t.n_rows());
    double acc = 0.0;
    for (std::size_t r = 0; r < t.n_rows(); ++r) {
      acc += t.weight(r);
      carry_cum.push_back(acc);
    }
  }

  std::atomic<std::size_t> rows_resampled{0}, rows_redrawn{0}, rows_violating{0};
  std::vector<std::atomic<std::size_t>> rule_hits(rules.size());
  for (auto& h : rule_hits) h.store(0);

  parallel_for(static_cast<std::int64_t>(n_out), [&](std::int64_t lo, std::int64_t hi) {
    RowBuf buf;
    buf.cat.assign(t.n_cols(), -1);
    buf.num.assign(t.n_cols(), std::numeric_limits<double>::quiet_NaN());
    std::vector<std::uint64_t> attempt(n_visit, 0);
    std::uint64_t carry_attempt = 0;

    auto draw_carry_block = [&](std::size_t row) {
      RngStream rng(cfg.master_seed, {kTagCarry, 0, row, carry_attempt++});
      const std::size_t donor =
          carry_cum.empty()
              ? static_cast<std::size_t>(rng.next_below(t.n_rows()))
              : pick_by_cumulative_weight(carry_cum, rng.next_unit() * carry_cum.back());
      for (std::size_t v = 0; v < n_visit; ++v) {
        if (plans[v].mode != ColumnMode::carry_observed) continue;
        const auto col = static_cast<std::size_t>(plan_cols[v]);
        if (t.is_numeric(col)) {
          buf.num[col] = t.numeric(col)[donor];
        } else {
          buf.cat[col] = t.categorical(col)[donor];
        }
      }
    };

    auto draw_column = [&](std::size_t v, std::size_t row) {
      const auto& tree = trees[static_cast<std::size_t>(tree_of_position[v])];
      const std::int32_t leaf = route_to_leaf(
          tree, [&](std::int32_t c) { return buf.cat[static_cast<std::size_t>(c)]; },
          [&](std::int32_t c) { return buf.num[static_cast<std::size_t>(c)]; });
      RngStream rng(cfg.master_seed, {kTagDraw, v, row, attempt[v]++});
      const std::uint32_t donor = sample_from_leaf(tree, leaf, rng);
      const auto col = static_cast<std::size_t>(plan_cols[v]);
      if (t.is_numeric(col)) {
        buf.num[col] = t.numeric(col)[donor];
      } else {
        buf.cat[col] = t.categorical(col)[donor];
      }
    };

    std::vector<int> rule_budget(rules.size(), 0);

    for (std::int64_t ri = lo; ri < hi; ++ri) {
      const auto row = static_cast<std::size_t>(ri);
      // Attempt counters restart per row so a row's streams are a function
      // of (seed, row) alone, never of chunk placement.
      std::fill(attempt.begin(), attempt.end(), 0);
      carry_attempt = 0;
      if (any_carry) draw_carry_block(row);
      for (auto v : synth_positions) draw_column(v, row);

      bool row_ok = rules.empty();
      bool first_pass = true;
      if (!rules.empty()) {
        for (int redraw = 0; redraw <= kRowRedrawLimit; ++redraw) {
          std::fill(rule_budget.begin(), rule_budget.end(), 0);
          bool exhausted = false;
          while (true) {
            std::ptrdiff_t violated = -1;
            for (std::size_t k = 0; k < rules.size(); ++k) {
              if (!rule_holds(rules[k], buf)) {
                violated = static_cast<std::ptrdiff_t>(k);
                break;
              }
            }
            if (violated < 0) {
              row_ok = true;
              break;
            }
            const auto k = static_cast<std::size_t>(violated);
            if (first_pass) {
              rule_hits[k].fetch_add(1, std::memory_order_relaxed);
              rows_resampled.fetch_add(1, std::memory_order_relaxed);
              first_pass = false;
            }
            if (rule_budget[k] >= rules[k].limit) {
              exhausted = true;
              break;
            }
            ++rule_budget[k];
            for (auto v : rules[k].resample_positions) draw_column(v, row);
          }
          if (row_ok || !exhausted) break;
          if (redraw == kRowRedrawLimit) break;
          // Full redraw: regenerate every synthesized column, keep the
          // carried block.
          rows_redrawn.fetch_add(1, std::memory_order_relaxed);
          for (auto v : synth_positions) draw_column(v, row);
        }
        if (!row_ok) rows_violating.fetch_add(1, std::memory_order_relaxed);
      }

      for (std::size_t v = 0; v < n_visit; ++v) {
        const auto col = static_cast<std::size_t>(plan_cols[v]);
        if (out_num[v]) {
          (*out_num[v])[row] = buf.num[col];
        } else {
          (*out_cat[v])[row] = buf.cat[col];
        }
      }
    }
  });

  SynthesisDiagnostics diag;
  diag.n_rows = n_out;
  diag.rows_resampled = rows_resampled.load();
  diag.rows_redrawn = rows_redrawn.load();
  diag.rows_violating = rows_violating.load();
  diag.rule_violations.reserve(rules.size());
  for (auto& h : rule_hits) diag.rule_violations.push_back(h.load());

  if (n_out > 0 &&
      static_cast<double>(diag.rows_violating) >
          cfg.max_violating_fraction * static_cast<double>(n_out)) {
    std::string worst;
    std::size_t worst_hits = 0;
    for (std::size_t k = 0; k < rules.size(); ++k) {
      if (diag.rule_violations[k] >= worst_hits) {
        worst_hits = diag.rule_violations[k];
        worst = cfg.consistency_rules[k].name;
      }
    }
    throw ConsistencyError(
        "consistency resampling exhausted for " + std::to_string(diag.rows_violating) + " of " +
        std::to_string(n_out) + " rows (limit " +
        std::to_string(cfg.max_violating_fraction * 100.0) + "%); most-violated rule: '" +
        worst + "'");
  }

  std::string weight_name;
  if (t.weighted() && seen_names.count(t.weight_column())) weight_name = t.weight_column();

  SynthesisResult result{Table(std::move(out_schema), std::move(out_columns), weight_name),
                         ModelBundle{}, diag};
  result.model.master_seed = cfg.master_seed;
  result.model.weighted = cfg.weighted;
  result.model.plans = std::move(plans);
  result.model.trees = std::move(trees);
  return result;
}

}  // namespace microsynth
