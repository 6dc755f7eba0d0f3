#include "microsynth/binning.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "microsynth/errors.hpp"

namespace microsynth {

Binning Binning::from_table(const Table& reference, std::size_t n_bins) {
  if (n_bins < 2) throw ConfigError("binning needs n_bins >= 2");
  if (n_bins > 60000) throw ConfigError("binning supports at most 60000 bins");
  Binning b;
  for (std::size_t c = 0; c < reference.n_cols(); ++c) {
    if (reference.weight_index() == static_cast<int>(c)) continue;
    const auto& sch = reference.schema(c);
    b.feature_cols_.push_back(c);
    b.names_.push_back(sch.name);
    b.numeric_.push_back(sch.kind == ColumnKind::numeric);
    if (sch.kind == ColumnKind::numeric) {
      const auto& xs = reference.numeric(c);
      std::vector<double> finite;
      finite.reserve(xs.size());
      for (double x : xs) {
        if (!std::isnan(x)) finite.push_back(x);
      }
      std::sort(finite.begin(), finite.end());
      std::vector<double> edges;
      if (!finite.empty()) {
        // Inverted-ECDF quantiles: edge i/n_bins = sorted[ceil(i*n/n_bins)-1].
        // An edge at the maximum would only open a bin the reference never
        // occupies, so quantiles that reach it are dropped.
        for (std::size_t i = 1; i < n_bins; ++i) {
          const std::size_t pos = (i * finite.size() + n_bins - 1) / n_bins;
          const double e = finite[pos - 1];
          if (e >= finite.back()) break;
          if (edges.empty() || e > edges.back()) edges.push_back(e);
        }
      }
      // Finite bins 0..edges.size(), then the NaN bin.
      b.base_bins_.push_back(edges.size() + 2);
      b.edges_.push_back(std::move(edges));
      b.categories_.emplace_back();
    } else {
      if (sch.categories.size() > 60000) {
        throw DataError("feature '" + sch.name + "' has too many categories to bin");
      }
      b.base_bins_.push_back(sch.categories.size());
      b.edges_.emplace_back();
      b.categories_.push_back(sch.categories);
    }
  }
  if (b.feature_cols_.empty()) throw DataError("binning: table has no features");
  return b;
}

Binning::Encoded Binning::encode(const Table& t) const {
  Encoded enc;
  enc.bins.resize(n_features());
  enc.n_bins.resize(n_features());
  for (std::size_t f = 0; f < n_features(); ++f) {
    const int ci = t.column_index(names_[f]);
    if (ci < 0) throw DataError("table is missing feature '" + names_[f] + "'");
    const auto col = static_cast<std::size_t>(ci);
    const bool num = t.is_numeric(col);
    if (num != numeric_[f]) {
      throw DataError("feature '" + names_[f] + "' changed kind between tables");
    }
    auto& bins = enc.bins[f];
    bins.resize(t.n_rows());
    if (num) {
      const auto& es = edges_[f];
      const auto nan_bin = static_cast<std::uint16_t>(es.size() + 1);
      const auto& xs = t.numeric(col);
      for (std::size_t r = 0; r < xs.size(); ++r) {
        if (std::isnan(xs[r])) {
          bins[r] = nan_bin;
        } else {
          const auto lb = std::lower_bound(es.begin(), es.end(), xs[r]);
          bins[r] = static_cast<std::uint16_t>(lb - es.begin());
        }
      }
      enc.n_bins[f] = base_bins_[f];
    } else {
      // Map this table's codes onto reference bins by category text; codes
      // the reference never saw extend the bin range.
      const auto& sch = t.schema(col);
      const auto& ref_cats = categories_[f];
      std::unordered_map<std::string, std::size_t> ref_index;
      ref_index.reserve(ref_cats.size());
      for (std::size_t i = 0; i < ref_cats.size(); ++i) ref_index[ref_cats[i]] = i;
      std::vector<std::size_t> code_to_bin(sch.categories.size());
      std::size_t next_extra = ref_cats.size();
      for (std::size_t i = 0; i < sch.categories.size(); ++i) {
        const auto it = ref_index.find(sch.categories[i]);
        code_to_bin[i] = it != ref_index.end() ? it->second : next_extra++;
      }
      if (next_extra > 65535) {
        throw DataError("feature '" + names_[f] + "' has too many categories to bin");
      }
      const auto& xs = t.categorical(col);
      for (std::size_t r = 0; r < xs.size(); ++r) {
        bins[r] = static_cast<std::uint16_t>(code_to_bin[static_cast<std::size_t>(xs[r])]);
      }
      enc.n_bins[f] = std::max(base_bins_[f], next_extra);
    }
  }
  return enc;
}

}  // namespace microsynth
