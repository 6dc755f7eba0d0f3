#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "microsynth/binning.hpp"
#include "microsynth/table.hpp"

namespace microsynth {

struct KMarginalConfig {
  std::size_t k = 2;
  std::size_t n_marginals = 1000;  // or all C(d,k) when that is smaller
  std::size_t n_bins = 20;
  std::uint64_t seed = 0;
};

struct MarginalScore {
  std::vector<std::size_t> features;  // feature indices, ascending
  double score = 0.0;                 // 1000 * (1 - TVD), in [0, 1000]
};

struct FeatureMean {
  std::size_t feature = 0;
  std::string name;
  double mean_score = 0.0;
  std::size_t n_marginals = 0;
};

struct KMarginalReport {
  double score = 0.0;  // mean over per-marginal scores
  std::vector<MarginalScore> per_marginal;
  std::vector<FeatureMean> per_feature_mean;  // feature-index order
  std::vector<std::string> feature_names;
};

// Scores distribution similarity over sampled k-wide feature subsets. Joint
// frequencies are binned per `bins` (quantile edges from the original unless
// a caller supplies its own), TVD = half the L1 gap, marginal score
// 1000*(1-TVD). Subsets are enumerated exhaustively when C(d,k) fits the
// budget, else sampled without replacement, deterministic in cfg.seed.
KMarginalReport k_marginal_score(const Table& original, const Table& synthetic,
                                 const KMarginalConfig& cfg);
KMarginalReport k_marginal_score(const Table& original, const Table& synthetic,
                                 const KMarginalConfig& cfg, const Binning& bins);

// Splits the table into a holdout_fraction / remainder partition (seeded
// shuffle) and scores one part against the other with bin edges from the
// FULL table. The self-similarity yardstick for synthesis scores.
double baseline_score(const Table& original, const KMarginalConfig& cfg,
                      double holdout_fraction, std::uint64_t seed);

// Features ranked by ascending mean marginal score (worst first).
std::vector<FeatureMean> worst_features(const KMarginalReport& report, std::size_t top_n);

}  // namespace microsynth
