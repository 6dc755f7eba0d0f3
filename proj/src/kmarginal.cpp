#include "microsynth/kmarginal.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>
#include <unordered_map>

#include "microsynth/errors.hpp"
#include "microsynth/parallel.hpp"
#include "microsynth/rng.hpp"

namespace microsynth {

namespace {

constexpr std::uint64_t kTagSubset = 0x5B;
constexpr std::uint64_t kTagPartition = 0x7A;

void check_schemas(const Table& a, const Table& b) {
  if (a.n_cols() != b.n_cols()) {
    throw DataError("tables have different column counts (" + std::to_string(a.n_cols()) +
                    " vs " + std::to_string(b.n_cols()) + ")");
  }
  for (std::size_t c = 0; c < a.n_cols(); ++c) {
    if (a.schema(c).name != b.schema(c).name) {
      throw DataError("column " + std::to_string(c) + " differs between tables: '" +
                      a.schema(c).name + "' vs '" + b.schema(c).name + "'");
    }
    if (a.schema(c).kind != b.schema(c).kind) {
      throw DataError("column '" + a.schema(c).name + "' changed kind between tables");
    }
  }
}

// C(d,k) saturating at `cap`; avoids overflow for wide tables.
std::uint64_t choose_capped(std::uint64_t d, std::uint64_t k, std::uint64_t cap) {
  if (k > d) return 0;
  k = std::min(k, d - k);
  std::uint64_t result = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    if (result > cap) return cap + 1;
    const std::uint64_t num = d - k + i;
    if (result > (~0ull) / num) return cap + 1;
    result = result * num / i;
  }
  return std::min(result, cap + 1);
}

std::vector<std::vector<std::size_t>> pick_subsets(std::size_t d, const KMarginalConfig& cfg) {
  std::vector<std::vector<std::size_t>> subsets;
  const std::uint64_t total = choose_capped(d, cfg.k, cfg.n_marginals);
  if (total <= cfg.n_marginals) {
    // Lexicographic enumeration of every k-subset.
    std::vector<std::size_t> cur(cfg.k);
    for (std::size_t i = 0; i < cfg.k; ++i) cur[i] = i;
    while (true) {
      subsets.push_back(cur);
      std::size_t i = cfg.k;
      while (i > 0) {
        --i;
        if (cur[i] != i + d - cfg.k) break;
        if (i == 0) return subsets;
      }
      ++cur[i];
      for (std::size_t j = i + 1; j < cfg.k; ++j) cur[j] = cur[j - 1] + 1;
    }
  }
  // Distinct random subsets: seeded partial shuffles, retrying collisions.
  std::set<std::vector<std::size_t>> seen;
  std::vector<std::size_t> pool(d);
  for (std::uint64_t attempt = 0; subsets.size() < cfg.n_marginals; ++attempt) {
    RngStream rng(cfg.seed, {kTagSubset, attempt});
    for (std::size_t i = 0; i < d; ++i) pool[i] = i;
    std::vector<std::size_t> cur(cfg.k);
    for (std::size_t i = 0; i < cfg.k; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.next_below(d - i));
      std::swap(pool[i], pool[j]);
      cur[i] = pool[i];
    }
    std::sort(cur.begin(), cur.end());
    if (seen.insert(cur).second) subsets.push_back(std::move(cur));
  }
  return subsets;
}

double marginal_tvd(const Binning::Encoded& ea, const Binning::Encoded& eb,
                    const std::vector<std::size_t>& subset) {
  const std::size_t na = ea.bins[0].size();
  const std::size_t nb = eb.bins[0].size();

  // Cell index strides over the union bin counts.
  std::uint64_t cells = 1;
  bool key64_ok = true;
  std::vector<std::uint64_t> stride(subset.size());
  for (std::size_t i = 0; i < subset.size(); ++i) {
    const std::size_t f = subset[i];
    const std::uint64_t nb_f = std::max<std::uint64_t>(std::max(ea.n_bins[f], eb.n_bins[f]), 1);
    stride[i] = cells;
    if (cells > (~0ull) / nb_f) {
      key64_ok = false;
      break;
    }
    cells *= nb_f;
  }

  // Cross-multiplied count differences stay integer-exact (<= 2*na*nb < 2^63),
  // so identical tables score exactly 1000 and disjoint support exactly 0.
  const auto ia = static_cast<std::int64_t>(na);
  const auto ib = static_cast<std::int64_t>(nb);
  std::int64_t diff = 0;  // sum |ca*nb - cb*na| = 2*na*nb*TVD
  if (!key64_ok) {
    // Stride product overflows 64 bits: key cells by their raw bin tuples.
    std::unordered_map<std::string, std::pair<std::int64_t, std::int64_t>> counts;
    auto key_of = [&](const Binning::Encoded& e, std::size_t r) {
      std::string key(subset.size() * sizeof(std::uint16_t), '\0');
      for (std::size_t i = 0; i < subset.size(); ++i) {
        std::memcpy(key.data() + i * sizeof(std::uint16_t), &e.bins[subset[i]][r],
                    sizeof(std::uint16_t));
      }
      return key;
    };
    for (std::size_t r = 0; r < na; ++r) ++counts[key_of(ea, r)].first;
    for (std::size_t r = 0; r < nb; ++r) ++counts[key_of(eb, r)].second;
    for (const auto& [key, c] : counts) {
      (void)key;
      diff += std::llabs(c.first * ib - c.second * ia);
    }
  } else if (cells <= (1ull << 22)) {
    std::vector<std::int64_t> ca(cells, 0), cb(cells, 0);
    for (std::size_t r = 0; r < na; ++r) {
      std::uint64_t key = 0;
      for (std::size_t i = 0; i < subset.size(); ++i) key += stride[i] * ea.bins[subset[i]][r];
      ++ca[key];
    }
    for (std::size_t r = 0; r < nb; ++r) {
      std::uint64_t key = 0;
      for (std::size_t i = 0; i < subset.size(); ++i) key += stride[i] * eb.bins[subset[i]][r];
      ++cb[key];
    }
    for (std::uint64_t cidx = 0; cidx < cells; ++cidx) {
      if (ca[cidx] | cb[cidx]) diff += std::llabs(ca[cidx] * ib - cb[cidx] * ia);
    }
  } else {
    std::unordered_map<std::uint64_t, std::pair<std::int64_t, std::int64_t>> counts;
    counts.reserve(na + nb);
    for (std::size_t r = 0; r < na; ++r) {
      std::uint64_t key = 0;
      for (std::size_t i = 0; i < subset.size(); ++i) key += stride[i] * ea.bins[subset[i]][r];
      ++counts[key].first;
    }
    for (std::size_t r = 0; r < nb; ++r) {
      std::uint64_t key = 0;
      for (std::size_t i = 0; i < subset.size(); ++i) key += stride[i] * eb.bins[subset[i]][r];
      ++counts[key].second;
    }
    for (const auto& [key, c] : counts) {
      (void)key;
      diff += std::llabs(c.first * ib - c.second * ia);
    }
  }
  return static_cast<double>(diff) / (2.0 * static_cast<double>(ia) * static_cast<double>(ib));
}

}  // namespace

KMarginalReport k_marginal_score(const Table& original, const Table& synthetic,
                                 const KMarginalConfig& cfg, const Binning& bins) {
  if (original.n_rows() == 0 || synthetic.n_rows() == 0) {
    throw DataError("k-marginal scoring needs nonempty tables");
  }
  check_schemas(original, synthetic);
  const std::size_t d = bins.n_features();
  if (cfg.k < 1 || cfg.k > d) {
    throw ConfigError("k-marginal width k=" + std::to_string(cfg.k) +
                      " is outside [1, " + std::to_string(d) + "]");
  }
  if (cfg.n_marginals < 1) throw ConfigError("n_marginals must be >= 1");

  const auto ea = bins.encode(original);
  const auto eb = bins.encode(synthetic);
  const auto subsets = pick_subsets(d, cfg);

  std::vector<double> scores(subsets.size());
  parallel_for(static_cast<std::int64_t>(subsets.size()), [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      const auto s = static_cast<std::size_t>(i);
      scores[s] = 1000.0 * (1.0 - marginal_tvd(ea, eb, subsets[s]));
    }
  });

  KMarginalReport report;
  report.per_marginal.reserve(subsets.size());
  std::vector<double> feature_sum(d, 0.0);
  std::vector<std::size_t> feature_cnt(d, 0);
  double total = 0.0;
  for (std::size_t s = 0; s < subsets.size(); ++s) {
    total += scores[s];
    for (auto f : subsets[s]) {
      feature_sum[f] += scores[s];
      ++feature_cnt[f];
    }
    report.per_marginal.push_back({subsets[s], scores[s]});
  }
  report.score = total / static_cast<double>(subsets.size());
  report.feature_names.reserve(d);
  for (std::size_t f = 0; f < d; ++f) report.feature_names.push_back(bins.feature_name(f));
  for (std::size_t f = 0; f < d; ++f) {
    if (feature_cnt[f] == 0) continue;
    report.per_feature_mean.push_back(
        {f, bins.feature_name(f), feature_sum[f] / static_cast<double>(feature_cnt[f]),
         feature_cnt[f]});
  }
  return report;
}

KMarginalReport k_marginal_score(const Table& original, const Table& synthetic,
                                 const KMarginalConfig& cfg) {
  return k_marginal_score(original, synthetic, cfg, Binning::from_table(original, cfg.n_bins));
}

double baseline_score(const Table& original, const KMarginalConfig& cfg,
                      double holdout_fraction, std::uint64_t seed) {
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw ConfigError("holdout fraction must lie in (0, 1)");
  }
  const std::size_t n = original.n_rows();
  if (n < 10) throw DataError("baseline score needs at least 10 rows");
  const auto n_a =
      static_cast<std::size_t>(std::floor(holdout_fraction * static_cast<double>(n) + 0.5));
  if (n_a == 0 || n_a == n) throw DataError("degenerate baseline partition");

  std::vector<std::uint32_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<std::uint32_t>(i);
  RngStream rng(seed, {kTagPartition});
  for (std::size_t i = n - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.next_below(i + 1));
    std::swap(perm[i], perm[j]);
  }
  std::vector<std::uint32_t> rows_a(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_a));
  std::vector<std::uint32_t> rows_b(perm.begin() + static_cast<std::ptrdiff_t>(n_a), perm.end());
  std::sort(rows_a.begin(), rows_a.end());
  std::sort(rows_b.begin(), rows_b.end());

  const Binning bins = Binning::from_table(original, cfg.n_bins);
  return k_marginal_score(original.select_rows(rows_a), original.select_rows(rows_b), cfg, bins)
      .score;
}

std::vector<FeatureMean> worst_features(const KMarginalReport& report, std::size_t top_n) {
  std::vector<FeatureMean> ranked = report.per_feature_mean;
  std::stable_sort(ranked.begin(), ranked.end(), [](const FeatureMean& a, const FeatureMean& b) {
    if (a.mean_score != b.mean_score) return a.mean_score < b.mean_score;
    return a.feature < b.feature;
  });
  if (ranked.size() > top_n) ranked.resize(top_n);
  return ranked;
}

}  // namespace microsynth
