#pragma once

#include <string>
#include <vector>

#include "microsynth/table.hpp"

namespace microsynth {

struct CategoryShare {
  std::string code;
  double share = 0.0;
  bool is_nr = false;
};

struct ColumnSummary {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  // Numeric: (weighted) mean over non-missing cells.
  double mean = 0.0;
  // Rows contributing (non-missing for numerics).
  std::size_t n = 0;
  double weight_total = 0.0;
  std::size_t n_missing = 0;
  // Categorical: shares per schema category, summing to 1 when n > 0.
  std::vector<CategoryShare> shares;
};

// Weighted mean is sum(w*x)/sum(w); weighted shares likewise.
std::vector<ColumnSummary> summarize(const Table& table,
                                     const std::vector<std::string>& columns,
                                     bool weighted);

}  // namespace microsynth
