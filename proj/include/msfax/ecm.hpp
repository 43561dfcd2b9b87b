#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "msfax/core.hpp"

namespace msfax {

struct EcmOptions {
  int max_iter = 2000;
  double rel_tol = 1e-6;  // stop when |l_t - l_{t-1}| < rel_tol * |l_{t-1}|
  int n_starts = 3;
  std::uint64_t seed = 1;
  double ridge = 1e-8;  // added to the diagonal of every matrix that is factorized

  void validate() const;
};

struct EcmFit {
  MsfaParameters params;
  std::vector<double> loglik_trace;  // observed-data log-likelihood per iteration
  bool converged = false;
  int n_iter = 0;
  int best_start = 0;
};

/// Fit Phi, Lambda_1..S and Psi_1..S by expectation / conditional
/// maximization on centered data. Returns the restart with the highest final
/// log-likelihood; loadings are lower triangular and sign-canonical (the
/// largest-magnitude entry of every column is positive).
EcmFit fit_msfa(const MultiStudyDataset& data, int k, std::span<const int> j, const EcmOptions& opts = {});

/// sum_s sum_i log N(x_is; 0, Phi Phi^T + Lambda_s Lambda_s^T + Psi_s)
double observed_loglik(const MsfaParameters& params, const MultiStudyDataset& data, double ridge = 0.0);

/// E[z | x] and E[z z^T | x] for z = (f, l) ~ N(0, I) and
/// x = [phi, lambda] z + e, e ~ N(0, diag(psi)).
struct ConditionalMoments {
  Vector mean;
  Matrix second_moment;
};

ConditionalMoments conditional_moments(const Matrix& phi, const Matrix& lambda, const Vector& psi, const Vector& x);

/// Flip loading columns so that the largest-magnitude entry of each is positive.
void canonicalize_signs(Matrix& loadings);

}  // namespace msfax
