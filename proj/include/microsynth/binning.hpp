#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "microsynth/table.hpp"

namespace microsynth {

// Discretization shared by the marginal scorer and univariate comparisons.
// Numeric features bin by quantile edges taken from a reference table (the
// original), upper-inclusive: bin(x) = #{edges e : x > e}, NaN in its own
// trailing bin. Edges are deduped and stay strictly below the reference
// maximum, so a constant feature has no edges at all. Categorical features
// bin by the reference category code; categories unseen in the reference
// get appended bins in encounter order.
class Binning {
 public:
  // Features are every column except the reference's weight column.
  static Binning from_table(const Table& reference, std::size_t n_bins);

  std::size_t n_features() const { return feature_cols_.size(); }
  const std::vector<std::size_t>& feature_cols() const { return feature_cols_; }
  const std::string& feature_name(std::size_t f) const { return names_[f]; }
  bool numeric(std::size_t f) const { return numeric_[f]; }
  const std::vector<double>& edges(std::size_t f) const { return edges_[f]; }
  // Bin count before any synthetic-only categories are appended.
  std::size_t base_bins(std::size_t f) const { return base_bins_[f]; }

  struct Encoded {
    std::vector<std::vector<std::uint16_t>> bins;  // [feature][row]
    std::vector<std::size_t> n_bins;               // per feature, >= base
  };
  // Binds features by column name; throws DataError when a feature is
  // missing or changes kind.
  Encoded encode(const Table& t) const;

 private:
  std::vector<std::size_t> feature_cols_;
  std::vector<std::string> names_;
  std::vector<bool> numeric_;
  std::vector<std::vector<double>> edges_;        // numeric features
  std::vector<std::vector<std::string>> categories_;  // categorical features
  std::vector<std::size_t> base_bins_;
};

}  // namespace microsynth
