#include "microsynth/compare.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "microsynth/binning.hpp"
#include "microsynth/errors.hpp"

namespace microsynth {

UnivariateComparison univariate_compare(const Table& original, const Table& synthetic,
                                        const std::string& feature, std::size_t n_bins) {
  const auto oc = static_cast<std::size_t>(original.require_column(feature));
  const auto sc = static_cast<std::size_t>(synthetic.require_column(feature));
  if (original.is_numeric(oc) != synthetic.is_numeric(sc)) {
    throw DataError("feature '" + feature + "' changed kind between tables");
  }

  UnivariateComparison out;
  out.feature = feature;

  if (original.is_numeric(oc)) {
    const Table ot = original.select_columns({feature});
    const Table st = synthetic.select_columns({feature});
    const Binning bins = Binning::from_table(ot, n_bins);
    const std::size_t f = 0;
    const auto& edges = bins.edges(f);
    const auto eo = bins.encode(ot);
    const auto es = bins.encode(st);
    const std::size_t total = bins.base_bins(f);
    std::vector<double> po(total, 0.0), ps(total, 0.0);
    for (auto b : eo.bins[f]) po[b] += 1.0;
    for (auto b : es.bins[f]) ps[b] += 1.0;
    for (auto& v : po) v /= static_cast<double>(std::max<std::size_t>(original.n_rows(), 1));
    for (auto& v : ps) v /= static_cast<double>(std::max<std::size_t>(synthetic.n_rows(), 1));
    for (std::size_t b = 0; b < total; ++b) {
      std::string label;
      if (b == total - 1) {
        label = "missing";
      } else if (edges.empty()) {
        label = "all";
      } else if (b == 0) {
        label = "<= " + format_double(edges[0]);
      } else if (b < edges.size()) {
        label = "(" + format_double(edges[b - 1]) + ", " + format_double(edges[b]) + "]";
      } else {
        label = "> " + format_double(edges.back());
      }
      out.bin_labels.push_back(std::move(label));
    }
    out.original_freq = std::move(po);
    out.synthetic_freq = std::move(ps);
  } else {
    const auto& ocats = original.schema(oc).categories;
    const auto& scats = synthetic.schema(sc).categories;
    std::unordered_map<std::string, std::size_t> index;
    for (const auto& c : ocats) {
      index.emplace(c, index.size());
      out.bin_labels.push_back(c);
    }
    std::vector<std::size_t> smap(scats.size());
    for (std::size_t i = 0; i < scats.size(); ++i) {
      const auto it = index.find(scats[i]);
      if (it != index.end()) {
        smap[i] = it->second;
      } else {
        smap[i] = out.bin_labels.size();
        index.emplace(scats[i], smap[i]);
        out.bin_labels.push_back(scats[i]);
      }
    }
    out.original_freq.assign(out.bin_labels.size(), 0.0);
    out.synthetic_freq.assign(out.bin_labels.size(), 0.0);
    for (auto code : original.categorical(oc)) {
      out.original_freq[static_cast<std::size_t>(code)] += 1.0;
    }
    for (auto code : synthetic.categorical(sc)) {
      out.synthetic_freq[smap[static_cast<std::size_t>(code)]] += 1.0;
    }
    for (auto& v : out.original_freq) {
      v /= static_cast<double>(std::max<std::size_t>(original.n_rows(), 1));
    }
    for (auto& v : out.synthetic_freq) {
      v /= static_cast<double>(std::max<std::size_t>(synthetic.n_rows(), 1));
    }
  }

  for (std::size_t b = 0; b < out.bin_labels.size(); ++b) {
    out.l1_distance += std::fabs(out.original_freq[b] - out.synthetic_freq[b]);
  }
  return out;
}

namespace {

ConditionalSlice slice_of(const Table& t, const FilterPredicate& filter, std::size_t target_col,
                          const std::vector<std::size_t>& code_map, std::size_t n_responses) {
  ConditionalSlice s;
  s.freq.assign(n_responses, 0.0);
  const auto mask = filter_mask(t, filter);
  const auto& xs = t.categorical(target_col);
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    if (!mask[r]) continue;
    ++s.n_matching;
    s.freq[code_map[static_cast<std::size_t>(xs[r])]] += 1.0;
  }
  if (s.n_matching > 0) {
    for (auto& v : s.freq) v /= static_cast<double>(s.n_matching);
  }
  return s;
}

}  // namespace

ConditionalComparison conditional_compare(const Table& original, const Table& synthetic,
                                          const FilterPredicate& filter,
                                          const std::string& target) {
  const auto oc = static_cast<std::size_t>(original.require_column(target));
  const auto sc = static_cast<std::size_t>(synthetic.require_column(target));
  if (original.is_numeric(oc) || synthetic.is_numeric(sc)) {
    throw ConfigError("conditional comparison target '" + target +
                      "' must be categorical (responses are categories)");
  }

  ConditionalComparison out;
  out.target = target;
  const auto& ocats = original.schema(oc).categories;
  const auto& scats = synthetic.schema(sc).categories;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& c : ocats) {
    index.emplace(c, index.size());
    out.responses.push_back(c);
  }
  std::vector<std::size_t> omap(ocats.size());
  for (std::size_t i = 0; i < ocats.size(); ++i) omap[i] = i;
  std::vector<std::size_t> smap(scats.size());
  for (std::size_t i = 0; i < scats.size(); ++i) {
    const auto it = index.find(scats[i]);
    if (it != index.end()) {
      smap[i] = it->second;
    } else {
      smap[i] = out.responses.size();
      index.emplace(scats[i], smap[i]);
      out.responses.push_back(scats[i]);
    }
  }
  const std::size_t n_resp = out.responses.size();

  out.original = slice_of(original, filter, oc, omap, n_resp);
  out.synthetic = slice_of(synthetic, filter, sc, smap, n_resp);
  out.empty_original = out.original.n_matching == 0;
  out.empty_synthetic = out.synthetic.n_matching == 0;
  if (original.n_rows() > 0) {
    out.share_original =
        static_cast<double>(out.original.n_matching) / static_cast<double>(original.n_rows());
  }
  if (synthetic.n_rows() > 0) {
    out.share_synthetic =
        static_cast<double>(out.synthetic.n_matching) / static_cast<double>(synthetic.n_rows());
  }
  if (out.share_original > 0.0) {
    out.share_ratio = out.share_synthetic / out.share_original;
    out.undersampled_warning = out.share_ratio < kUndersampledRatio;
  }
  return out;
}

}  // namespace microsynth
