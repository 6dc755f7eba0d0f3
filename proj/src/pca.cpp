#include "microsynth/pca.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "microsynth/errors.hpp"
#include "microsynth/parallel.hpp"

namespace microsynth {

namespace {

// Feature accessor: categorical cells read as their code index.
struct FeatureView {
  const CategoricalColumn* cat = nullptr;
  const NumericColumn* num = nullptr;
  double operator()(std::size_t row) const {
    return num ? (*num)[row] : static_cast<double>((*cat)[row]);
  }
};

}  // namespace

PcaHalf pairwise_pca(const Table& t, std::size_t n_components) {
  if (n_components < 1) throw ConfigError("pca needs n_components >= 1");
  const std::size_t n = t.n_rows();
  if (n <= n_components) {
    throw DataError("pca needs more rows than components (" + std::to_string(n) + " rows)");
  }

  PcaHalf out;
  std::vector<FeatureView> views;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < t.n_cols(); ++c) {
    if (t.weight_index() == static_cast<int>(c)) continue;
    FeatureView v;
    if (t.is_numeric(c)) {
      v.num = &t.numeric(c);
    } else {
      v.cat = &t.categorical(c);
    }
    views.push_back(v);
    names.push_back(t.schema(c).name);
  }

  // Means and sample sds; zero-variance features are dropped with a record.
  std::vector<FeatureView> used;
  for (std::size_t f = 0; f < views.size(); ++f) {
    double s = 0.0, q = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double x = views[f](r);
      if (!std::isfinite(x)) {
        throw DataError("pca feature '" + names[f] + "' is not finite at row " +
                        std::to_string(r));
      }
      s += x;
      q += x * x;
    }
    const double mean = s / static_cast<double>(n);
    double var = (q - s * mean) / static_cast<double>(n - 1);
    if (var < 0.0) var = 0.0;
    const double sd = std::sqrt(var);
    if (sd == 0.0) {
      out.encoding.dropped.push_back(names[f]);
      continue;
    }
    used.push_back(views[f]);
    out.encoding.features.push_back(names[f]);
    out.encoding.means.push_back(mean);
    out.encoding.sds.push_back(sd);
  }
  const std::size_t p = used.size();
  if (p < 2) throw DataError("pca needs at least 2 non-constant features");

  // Correlation matrix from raw cross sums: no n x p copy of the data.
  Eigen::MatrixXd corr(p, p);
  const std::size_t n_pairs = p * (p + 1) / 2;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(n_pairs);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t k = j; k < p; ++k) pairs.emplace_back(j, k);
  }
  std::vector<double> cross(n_pairs, 0.0);
  parallel_for(static_cast<std::int64_t>(n_pairs), [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      const auto [j, k] = pairs[static_cast<std::size_t>(i)];
      double acc = 0.0;
      for (std::size_t r = 0; r < n; ++r) acc += used[j](r) * used[k](r);
      cross[static_cast<std::size_t>(i)] = acc;
    }
  });
  for (std::size_t i = 0; i < n_pairs; ++i) {
    const auto [j, k] = pairs[i];
    const double cov = (cross[i] - static_cast<double>(n) * out.encoding.means[j] *
                                       out.encoding.means[k]) /
                       static_cast<double>(n - 1);
    const double rho = cov / (out.encoding.sds[j] * out.encoding.sds[k]);
    corr(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = rho;
    corr(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = rho;
  }
  for (std::size_t j = 0; j < p; ++j) {
    corr(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) = 1.0;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(corr);
  if (solver.info() != Eigen::Success) throw DataError("pca eigendecomposition failed");
  const auto& values = solver.eigenvalues();   // ascending
  const auto& vectors = solver.eigenvectors();

  double total = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i) total += values(i);
  out.total_variance = total;

  const std::size_t n_top = std::min(n_components, p);
  Eigen::MatrixXd basis(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(n_top));
  for (std::size_t c = 0; c < n_top; ++c) {
    const auto src = static_cast<Eigen::Index>(p - 1 - c);
    Eigen::VectorXd v = vectors.col(src);
    Eigen::Index argmax = 0;
    v.cwiseAbs().maxCoeff(&argmax);
    if (v(argmax) < 0.0) v = -v;
    basis.col(static_cast<Eigen::Index>(c)) = v;
    const double lambda = values(src) > 0.0 ? values(src) : 0.0;
    out.eigenvalues.push_back(lambda);
    out.variance_shares.push_back(total > 0.0 ? lambda / total : 0.0);
  }

  out.projections.assign(n_top, std::vector<double>(n));
  parallel_for(static_cast<std::int64_t>(n), [&](std::int64_t lo, std::int64_t hi) {
    std::vector<double> z(p);
    for (std::int64_t ri = lo; ri < hi; ++ri) {
      const auto r = static_cast<std::size_t>(ri);
      for (std::size_t j = 0; j < p; ++j) {
        z[j] = (used[j](r) - out.encoding.means[j]) / out.encoding.sds[j];
      }
      for (std::size_t c = 0; c < n_top; ++c) {
        double acc = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
          acc += z[j] * basis(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c));
        }
        out.projections[c][r] = acc;
      }
    }
  });

  return out;
}

PcaComparison compare_pca(const Table& a, const Table& b, std::size_t n_components) {
  return {pairwise_pca(a, n_components), pairwise_pca(b, n_components)};
}

}  // namespace microsynth
