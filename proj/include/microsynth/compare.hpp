#pragma once

#include <string>
#include <vector>

#include "microsynth/filter.hpp"
#include "microsynth/table.hpp"

namespace microsynth {

// Histogram/bar-chart data for one feature, binned identically in both
// tables (numeric edges from the original's quantiles).
struct UnivariateComparison {
  std::string feature;
  std::vector<std::string> bin_labels;
  std::vector<double> original_freq;   // sums to 1 when the table is nonempty
  std::vector<double> synthetic_freq;
  double l1_distance = 0.0;
};

UnivariateComparison univariate_compare(const Table& original, const Table& synthetic,
                                        const std::string& feature, std::size_t n_bins);

// Synthetic subgroup shrinking below this share ratio flags a warning.
inline constexpr double kUndersampledRatio = 0.8;

struct ConditionalSlice {
  std::size_t n_matching = 0;
  std::vector<double> freq;  // per response, sums to 1 when n_matching > 0
};

struct ConditionalComparison {
  std::string target;
  std::vector<std::string> responses;  // original's categories, then unseen ones
  ConditionalSlice original;
  ConditionalSlice synthetic;
  double share_original = 0.0;   // n_matching / n_rows
  double share_synthetic = 0.0;
  double share_ratio = 1.0;      // synthetic share over original share
  bool undersampled_warning = false;
  bool empty_original = false;
  bool empty_synthetic = false;
};

// Relative response frequencies of `target` among rows matching `filter`,
// computed independently per table. n_matching and the share ratio expose
// rare-subgroup attrition in the synthetic data.
ConditionalComparison conditional_compare(const Table& original, const Table& synthetic,
                                          const FilterPredicate& filter,
                                          const std::string& target);

}  // namespace microsynth
