#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "microsynth/design.hpp"
#include "microsynth/intervals.hpp"

namespace microsynth {

struct Convergence {
  std::size_t iterations = 0;
  double gradient_norm = 0.0;  // max |score| at exit
};

struct RegressionResult {
  std::string model;
  ModelKind kind = ModelKind::ols;
  std::vector<std::string> columns;  // intercept first
  std::vector<double> beta;
  std::vector<double> se;
  std::vector<Interval> ci;  // beta -+ kZ95 * se
  std::vector<double> p;     // two-sided Wald, normal reference
  std::size_t n = 0;
  double sigma2 = 0.0;       // ols residual variance, RSS / (n - p)
  Convergence convergence;   // logit only

  std::size_t param_index(const std::string& name) const;  // throws ConfigError
};

// Least squares through a rank-revealing QR; classical standard errors from
// sigma^2 (X'X)^-1. Rank deficiency is an error naming the dependent columns.
RegressionResult fit_ols(const DesignMatrix& d);

// Maximum likelihood by Newton/IRLS. Converged when the score's max norm
// drops below tol. Divergence (any |beta| > 30) and vanishing working
// weights report quasi-complete separation rather than non-convergence.
RegressionResult fit_logistic(const DesignMatrix& d, double tol = 1e-8,
                              std::size_t max_iter = 50);

// exp of the coefficient interval endpoints; logit results only.
Interval odds_ratio_ci(const RegressionResult& r, const std::string& param);

}  // namespace microsynth
