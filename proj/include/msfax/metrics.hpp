#pragma once

#include <string>
#include <vector>

#include "msfax/core.hpp"

namespace msfax {

/// Modified RV coefficient: diagonals of A A^T and B B^T are removed before
/// the matrix correlation is taken.
double matrix_rv(const Matrix& a, const Matrix& b);

/// ||G_hat - G|| / ||G|| over the strict lower triangle.
double relative_euclidean(const GgmNetwork& estimate, const GgmNetwork& truth);

/// Cosine of the angle between the strict lower triangles.
double cosine_similarity(const GgmNetwork& estimate, const GgmNetwork& truth);

struct MetricRecord {
  std::string method;
  std::string setting;
  std::string target;  // "Shared" or "Study <s>"
  int replicate = 0;
  double matrix_rv = 0.0;
  double relative_euclidean = 0.0;
  double cosine = 0.0;
};

struct Summary {
  double median = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
};

/// Sample quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double prob);
Summary summarize(const std::vector<double>& values);

/// Metric records from one replicate. Metrics that are undefined for a pair
/// (degenerate input) are stored as NaN.
MetricRecord evaluate_network(const GgmNetwork& estimate, const GgmNetwork& truth);

}  // namespace msfax
