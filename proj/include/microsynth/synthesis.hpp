#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "microsynth/filter.hpp"
#include "microsynth/table.hpp"
#include "microsynth/tree.hpp"

namespace microsynth {

enum class ColumnMode { synthesize, carry_observed };

struct ColumnPlan {
  std::string name;
  ColumnMode mode = ColumnMode::synthesize;
  // Carried columns join later trees' predictor sets only when opted in.
  bool carry_as_predictor = false;
  std::optional<TreeParams> params;  // overrides default_params
};

// Row-level constraint checked after a full synthetic row is drawn. On
// violation the named synthesized columns are redrawn (fresh streams), up to
// `resample_limit` times; after that the whole row is redrawn from scratch.
struct ConsistencyRule {
  std::string name;
  FilterPredicate must_hold;
  std::vector<std::string> resample_columns;
  int resample_limit = 20;
};

struct SynthesisConfig {
  // Output columns in generation order. Each synthesized column's tree is
  // fitted on the original table with all preceding synthesized columns
  // (plus opted-in carried columns) as predictors; the first column with no
  // predictors is a bootstrap of its observed marginal.
  std::vector<ColumnPlan> visit_order;
  TreeParams default_params;
  std::vector<ConsistencyRule> consistency_rules;
  std::size_t n_synthetic_rows = 0;
  std::uint64_t master_seed = 0;
  bool weighted = false;
  // Abort when more rows than this fraction exhaust every redraw budget.
  double max_violating_fraction = 0.01;
};

struct SynthesisDiagnostics {
  std::size_t n_rows = 0;
  std::size_t rows_resampled = 0;   // rows that hit >= 1 rule violation
  std::size_t rows_redrawn = 0;     // rows that fell back to a full redraw
  std::size_t rows_violating = 0;   // rows still violating after all budgets
  std::vector<std::size_t> rule_violations;  // first-pass hits per rule
};

struct ModelBundle {
  std::uint64_t master_seed = 0;
  bool weighted = false;
  std::vector<ColumnPlan> plans;   // as resolved (params filled in)
  std::vector<DecisionTree> trees; // one per synthesized column, visit order
};

struct SynthesisResult {
  Table synthetic;
  ModelBundle model;
  SynthesisDiagnostics diagnostics;
};

// Sequential CART synthesis: fits one tree per synthesized column on the
// original table, then generates rows independently by routing each row's
// already-drawn values down the fitted trees. Deterministic function of
// (t, cfg), byte-identical at any thread count. Carried columns are copied
// from a per-row bootstrap donor as one block.
SynthesisResult synthesize(const Table& t, const SynthesisConfig& cfg);

}  // namespace microsynth
