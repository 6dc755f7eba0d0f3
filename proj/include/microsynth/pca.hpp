#pragma once

#include <string>
#include <vector>

#include "microsynth/table.hpp"

namespace microsynth {

struct PcaEncoding {
  std::vector<std::string> features;  // used, in table order
  std::vector<std::string> dropped;   // zero-variance features
  std::vector<double> means;          // per used feature
  std::vector<double> sds;            // sample sd, n-1 denominator
};

struct PcaHalf {
  PcaEncoding encoding;
  std::vector<double> eigenvalues;      // top components, descending
  std::vector<double> variance_shares;  // eigenvalue / sum of all eigenvalues
  double total_variance = 0.0;          // sum over every component
  // projections[c][row]: coordinate on component c of the standardized data.
  std::vector<std::vector<double>> projections;
};

// PCA of the correlation matrix. Categorical features enter as their
// category code index (declared order); every feature is standardized by
// its own dataset's mean and sample sd. Eigenvector sign convention: the
// largest-magnitude entry is positive.
PcaHalf pairwise_pca(const Table& t, std::size_t n_components = 5);

struct PcaComparison {
  PcaHalf a;
  PcaHalf b;
};

// Independent fits; the comparison is side by side, never a shared basis.
PcaComparison compare_pca(const Table& a, const Table& b, std::size_t n_components = 5);

}  // namespace microsynth
