#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"

#include "microsynth/audit.hpp"
#include "microsynth/compare.hpp"
#include "microsynth/design.hpp"
#include "microsynth/filter.hpp"
#include "microsynth/kmarginal.hpp"
#include "microsynth/pca.hpp"
#include "microsynth/recode.hpp"
#include "microsynth/replication.hpp"
#include "microsynth/summary.hpp"
#include "microsynth/synthesis.hpp"
#include "microsynth/table.hpp"

namespace microsynth {

// Insertion-ordered so dumped artifacts keep a stable, readable key order.
using Json = nlohmann::ordered_json;

// Parse errors and missing files surface as ConfigError naming the path.
Json load_json_file(const std::string& path);
// 2-space indent plus trailing newline. Doubles round-trip exactly.
std::string dump_json(const Json& j);
void write_text_file(const std::string& path, const std::string& text);

struct SchemaFile {
  std::vector<ColumnSchema> columns;
  std::string weight_column;
};
// {"columns": [{"name", "kind": "numeric"|"categorical", "categories",
// "nr_codes", "unit_note"}], "weight_column"}. Categorical columns must
// declare their categories.
SchemaFile parse_schema(const Json& j);

// {"column", "op": eq|ne|in_set|not_in_set|in_range|not_in_range, "value"
// (string or number), "values" (strings), "lo"/"hi"}.
FilterAtom parse_filter_atom(const Json& j);
// An atom object, an array of atoms, or {"all": [atoms]}; conjunction.
FilterPredicate parse_filter(const Json& j);

// {"rules": [...]} or a bare array. Rule keys depend on "kind":
//   flag_any: any_of        product: factors
//   log_ratio: numerator, denominator?, scale?, missing_on_nonpositive?
//   bucket: source, edges, labels
//   map_cases: cases [{when, value}], default?
RecodeSpec parse_recode_spec(const Json& j);

// {"visit_order": [name or {"column", "mode", "as_predictor", "params"}],
//  "default_params", "consistency_rules" [{"name", "require", "resample",
//  "limit"}], "rows", "seed", "weighted", "max_violating_fraction"}.
SynthesisConfig parse_synthesis_config(const Json& j);

// {"models": [...]} or a bare array. Model keys: name, kind (ols|logit),
// response, filter?, recodes?, predictors?, interactions?, dummy_blocks?.
std::vector<ModelSpec> parse_model_specs(const Json& j);

enum class FigureKind { univariate, conditional, pca };

struct FigureSpec {
  std::string name;
  FigureKind kind = FigureKind::univariate;
  // univariate
  std::string feature;
  std::size_t n_bins = 20;
  // conditional slice, or pca highlight predicate
  FilterPredicate filter;
  std::string target;  // conditional
  // pca: 0-based component indices ("components": [1, 2] in config is 1-based)
  std::size_t pc_i = 0;
  std::size_t pc_j = 1;
};
// {"figures": [{"name", "type": univariate|conditional|pca, ...}]} or array.
std::vector<FigureSpec> parse_figures(const Json& j);

struct SummarySpec {
  FilterPredicate filter;
  RecodeSpec recodes;
  std::vector<std::string> columns;  // empty = every column
  bool weighted = false;
  std::string weight_column;  // designates/overrides the table's weight
};
// {"filter"?, "recodes"?, "columns"?, "weighted"?, "weight_column"?}.
SummarySpec parse_summary_spec(const Json& j);

// Fitted model bundle round trip: seed, resolved plans, trees with donor
// pools by fitting-row index.
Json bundle_to_json(const ModelBundle& bundle);
ModelBundle bundle_from_json(const Json& j);

// Report artifacts. Every object carries schema_version; headline score is
// also reported rounded half-up to an integer.
Json kmarginal_report_to_json(const KMarginalReport& report, const KMarginalConfig& cfg);
Json pca_comparison_to_json(const PcaComparison& cmp);
Json replication_to_json(const ReplicationReport& report);
std::string replication_to_csv(const ReplicationReport& report);
Json summary_to_json(const std::vector<ColumnSummary>& columns, bool weighted);
Json audit_to_json(const ExactMatchAudit& audit);
Json conditional_to_json(const ConditionalComparison& cmp);
Json synthesis_diagnostics_to_json(const SynthesisDiagnostics& d,
                                   const std::vector<ConsistencyRule>& rules);

// Plot-data CSV builders (category, original_freq, synthetic_freq), and
// per-table PCA point clouds (pc_<i+1>, pc_<j+1>, highlight_flag).
std::string univariate_csv(const UnivariateComparison& cmp);
std::string conditional_csv(const ConditionalComparison& cmp);
std::string pca_points_csv(const PcaHalf& half, std::size_t pc_i, std::size_t pc_j,
                           const std::vector<char>& highlight);

}  // namespace microsynth
