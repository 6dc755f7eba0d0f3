#include "microsynth/regression.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "microsynth/errors.hpp"

namespace microsynth {

namespace {

constexpr double kSeparationBetaBound = 30.0;
constexpr double kWeightFloor = 1e-12;

Eigen::MatrixXd design_matrix(const DesignMatrix& d) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(d.n), static_cast<Eigen::Index>(d.p));
  for (std::size_t i = 0; i < d.n; ++i) {
    for (std::size_t j = 0; j < d.p; ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d.at(i, j);
    }
  }
  return x;
}

double wald_p(double beta, double se) {
  if (se == 0.0) return beta == 0.0 ? 1.0 : 0.0;
  const double z = std::fabs(beta / se);
  return std::erfc(z / std::sqrt(2.0));
}

void fill_inference(RegressionResult& r) {
  r.ci.reserve(r.beta.size());
  r.p.reserve(r.beta.size());
  for (std::size_t j = 0; j < r.beta.size(); ++j) {
    r.ci.push_back({r.beta[j] - kZ95 * r.se[j], r.beta[j] + kZ95 * r.se[j]});
    r.p.push_back(wald_p(r.beta[j], r.se[j]));
  }
}

void throw_rank_deficient(const DesignMatrix& d,
                          const Eigen::ColPivHouseholderQR<Eigen::MatrixXd>& qr) {
  const auto rank = qr.rank();
  const auto& perm = qr.colsPermutation().indices();
  std::string cols;
  for (Eigen::Index i = rank; i < perm.size(); ++i) {
    if (!cols.empty()) cols += ", ";
    cols += d.columns[static_cast<std::size_t>(perm(i))];
  }
  throw DataError("model '" + d.model + "': design is rank deficient; dependent columns: " +
                  cols);
}

}  // namespace

std::size_t RegressionResult::param_index(const std::string& name) const {
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j] == name) return j;
  }
  throw ConfigError("model '" + model + "' has no parameter '" + name + "'");
}

RegressionResult fit_ols(const DesignMatrix& d) {
  const Eigen::MatrixXd x = design_matrix(d);
  const Eigen::VectorXd y =
      Eigen::Map<const Eigen::VectorXd>(d.y.data(), static_cast<Eigen::Index>(d.n));

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < static_cast<Eigen::Index>(d.p)) throw_rank_deficient(d, qr);
  const Eigen::VectorXd beta = qr.solve(y);

  const Eigen::VectorXd resid = y - x * beta;
  const double rss = resid.squaredNorm();
  const double sigma2 = rss / static_cast<double>(d.n - d.p);

  const Eigen::MatrixXd xtx = x.transpose() * x;
  const Eigen::MatrixXd cov =
      sigma2 * xtx.ldlt().solve(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d.p),
                                                          static_cast<Eigen::Index>(d.p)));

  RegressionResult r;
  r.model = d.model;
  r.kind = ModelKind::ols;
  r.columns = d.columns;
  r.n = d.n;
  r.sigma2 = sigma2;
  for (std::size_t j = 0; j < d.p; ++j) {
    r.beta.push_back(beta(static_cast<Eigen::Index>(j)));
    const double v = cov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
    r.se.push_back(v > 0.0 ? std::sqrt(v) : 0.0);
  }
  fill_inference(r);
  return r;
}

RegressionResult fit_logistic(const DesignMatrix& d, double tol, std::size_t max_iter) {
  if (d.kind != ModelKind::logit) {
    throw ConfigError("model '" + d.model + "': logistic fit on a non-logit design");
  }
  bool any0 = false, any1 = false;
  for (double yv : d.y) (yv == 0.0 ? any0 : any1) = true;
  if (!any0 || !any1) {
    throw DataError("model '" + d.model +
                    "': response is constant; the logistic MLE does not exist");
  }

  const Eigen::MatrixXd x = design_matrix(d);
  const Eigen::VectorXd y =
      Eigen::Map<const Eigen::VectorXd>(d.y.data(), static_cast<Eigen::Index>(d.n));
  const auto n = static_cast<Eigen::Index>(d.n);
  const auto p = static_cast<Eigen::Index>(d.p);

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd prob(n), w(n);
  Eigen::MatrixXd info(p, p);
  double gnorm = std::numeric_limits<double>::infinity();
  std::size_t iter = 0;

  for (;; ++iter) {
    const Eigen::VectorXd eta = x * beta;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double pi = 1.0 / (1.0 + std::exp(-eta(i)));
      prob(i) = pi;
      w(i) = pi * (1.0 - pi);
    }
    const Eigen::VectorXd score = x.transpose() * (y - prob);
    gnorm = score.lpNorm<Eigen::Infinity>();
    if (gnorm < tol) break;
    if (iter >= max_iter) {
      throw DataError("model '" + d.model + "': logistic fit did not converge in " +
                      std::to_string(max_iter) + " iterations (score norm " +
                      std::to_string(gnorm) + ")");
    }
    if (w.maxCoeff() < kWeightFloor) {
      throw SeparationError("model '" + d.model +
                            "': working weights vanished (quasi-complete separation)");
    }
    info = x.transpose() * w.asDiagonal() * x;
    const Eigen::VectorXd step = info.ldlt().solve(score);
    if (!step.allFinite()) {
      throw SeparationError("model '" + d.model +
                            "': information matrix collapsed (quasi-complete separation)");
    }
    beta += step;
    if (beta.lpNorm<Eigen::Infinity>() > kSeparationBetaBound) {
      throw SeparationError("model '" + d.model +
                            "': coefficients diverged (quasi-complete separation)");
    }
  }

  info = x.transpose() * w.asDiagonal() * x;
  const Eigen::MatrixXd cov = info.ldlt().solve(Eigen::MatrixXd::Identity(p, p));

  RegressionResult r;
  r.model = d.model;
  r.kind = ModelKind::logit;
  r.columns = d.columns;
  r.n = d.n;
  r.convergence.iterations = iter;
  r.convergence.gradient_norm = gnorm;
  for (Eigen::Index j = 0; j < p; ++j) {
    r.beta.push_back(beta(j));
    const double v = cov(j, j);
    r.se.push_back(v > 0.0 ? std::sqrt(v) : 0.0);
  }
  fill_inference(r);
  return r;
}

Interval odds_ratio_ci(const RegressionResult& r, const std::string& param) {
  if (r.kind != ModelKind::logit) {
    throw ConfigError("odds ratios apply to logit results only (model '" + r.model + "')");
  }
  const std::size_t j = r.param_index(param);
  return {std::exp(r.ci[j].lo), std::exp(r.ci[j].hi)};
}

}  // namespace microsynth
