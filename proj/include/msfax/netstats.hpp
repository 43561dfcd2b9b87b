#pragma once

#include <optional>
#include <vector>

#include "msfax/core.hpp"

namespace msfax {

/// Magnitude a partial correlation must reach to be significant under a
/// Bonferroni-corrected Fisher z-test over all p(p-1)/2 edges at family level
/// family_alpha: tanh(z_{1 - alpha} / sqrt(n - (p - 2) - 3)) with
/// alpha = family_alpha / (p (p - 1)).
double fisher_threshold(long long n, int p, double family_alpha);

/// Zero every entry with |value| < t.
GgmNetwork threshold_network(const GgmNetwork& net, double t);

/// HITS hub scores of the absolute-weight adjacency, scaled so the maximum is 1.
Vector hub_scores(const GgmNetwork& net);

/// sum_j F_j x_j / ||F||
double project_onto_factor(const Vector& x, const Vector& factor);

/// Inputs to the metabolite log-ratio pipeline. Masks flag missing entries
/// (true = missing); group labels select the centering strata.
struct LogRatioInput {
  Matrix fasting;
  Matrix post;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> fasting_missing;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> post_missing;
  std::vector<int> groups;  // empty = a single group
};

/// Half-minimum imputation of missing values, log2(post / fasting), then
/// column centering within each group.
Matrix log_ratio_preprocess(const LogRatioInput& input);

/// Uncentered log2 ratios after imputation (the step before centering).
Matrix log_ratios(const LogRatioInput& input);

/// Residuals of each column of y regressed on [1, covariates], re-centered
/// within each group.
Matrix covariate_residualize(const Matrix& y, const Matrix& covariates, const std::vector<int>& groups = {});

/// Column centering within each group label.
Matrix center_by_group(const Matrix& y, const std::vector<int>& groups);

}  // namespace msfax
