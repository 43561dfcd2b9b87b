#pragma once

#include <vector>

#include "msfax/core.hpp"
#include "msfax/decompose.hpp"

namespace msfax {

struct GlassoOptions {
  std::vector<double> lambda_grid{0.0, 0.001, 0.01, 0.1, 1.0};
  int max_iter = 1000;  // outer sweeps over columns
  double tol = 1e-4;    // KKT residual

  void validate() const;
};

/// Maximizes log det(Theta) - tr(S Theta) - lambda * sum_{i != j} |theta_ij|
/// by blockwise coordinate descent over the columns of the working
/// covariance. The diagonal is not penalized.
Matrix graphical_lasso(const Matrix& sample_cov, double lambda, const GlassoOptions& opts = {});

/// Largest violation of the stationarity conditions of the objective above
/// at theta (uses an explicit inverse; intended for diagnostics and tests).
double glasso_kkt_residual(const Matrix& sample_cov, const Matrix& theta, double lambda);

struct BicSelection {
  double lambda = 0.0;
  Matrix precision;
  std::vector<double> grid;
  std::vector<double> bic;  // NaN for skipped grid points
};

/// argmin over the grid of -2 loglik + log(n) * (nonzero upper-triangular
/// entries); ties go to the larger lambda.
BicSelection bic_select(const Matrix& sample_cov, long long n, const GlassoOptions& opts = {});

/// Graphical-lasso baseline: per-study networks, a pooled shared network, and
/// study-specific difference networks (per-study minus pooled).
NetworkSet benchmark_networks(const MultiStudyDataset& data, const GlassoOptions& opts = {});

}  // namespace msfax
