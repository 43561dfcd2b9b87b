#pragma once

#include <string>
#include <vector>

#include "msfax/core.hpp"
#include "msfax/ecm.hpp"

namespace msfax {

/// Cattell-Nelson-Gorsuch scree test on descending eigenvalues. For each
/// window start i, least-squares slopes are fit to eigenvalues (i, i+1, i+2)
/// and (i+3, i+4, i+5); the returned count is i + 2 for the 0-based i that
/// maximizes slope_after - slope_before. Ties go to the smallest i.
int cng_scree(const Vector& eigenvalues);

/// Slope differences slope_after - slope_before for every window start.
std::vector<double> cng_slope_differences(const Vector& eigenvalues);

struct FactorCountEstimate {
  std::vector<int> total_per_study;  // t_s
  int k = 0;
  std::vector<int> j;
  std::vector<double> shared_eigen_fractions;  // eigenvalues of Phi Phi^T / trace
  std::vector<std::string> warnings;
};

/// Two-step factor counting: t_s from a CNG scree test on each study's
/// correlation eigenvalues; then an MSFA fit with k* = min t_s whose shared
/// covariance eigenvalues above 5% of the trace set k; j_s = t_s - k.
FactorCountEstimate estimate_factor_counts(const MultiStudyDataset& data, const EcmOptions& opts = {});

/// Descending eigenvalues of a study's sample correlation matrix.
Vector correlation_eigenvalues(const Matrix& centered_study);

}  // namespace msfax
