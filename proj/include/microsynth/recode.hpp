#pragma once

#include <string>
#include <vector>

#include "microsynth/filter.hpp"
#include "microsynth/table.hpp"

namespace microsynth {

enum class RecodeKind {
  flag_any,    // 1 iff any source atom matches, else 0
  product,     // product of numeric source columns
  log_ratio,   // ln(scale * numerator / denominator)
  bucket,      // numeric column -> ordered categorical labels
  map_cases,   // first matching predicate decides the value
};

struct RecodeCase {
  FilterPredicate when;
  bool value_is_number = true;
  double number = 0.0;
  std::string code;
};

struct RecodeRule {
  std::string target;
  RecodeKind kind = RecodeKind::map_cases;

  // flag_any
  std::vector<FilterAtom> any_of;
  // product
  std::vector<std::string> factors;
  // log_ratio; empty denominator means plain ln(scale * numerator).
  std::string numerator;
  std::string denominator;
  double scale = 1.0;
  // Non-positive argument: error by default, or emit the missing marker
  // (NaN) so the caller can filter the row.
  bool missing_on_nonpositive = false;
  // bucket: labels.size() == edges.size() + 1; value <= edges[i] picks the
  // first open bucket, upper-inclusive.
  std::string source;
  std::vector<double> edges;
  std::vector<std::string> labels;
  // map_cases
  std::vector<RecodeCase> cases;
  bool has_default = false;
  bool default_is_number = true;
  double default_number = 0.0;
  std::string default_code;
};

// Ordered rules; each appends one derived column, later rules may reference
// earlier targets. Source columns are never mutated.
struct RecodeSpec {
  std::vector<RecodeRule> rules;
};

Table apply_recode(const Table& table, const RecodeSpec& spec);

}  // namespace microsynth
