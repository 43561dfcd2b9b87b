#include "msfax/factors.hpp"

#include <algorithm>

#include "msfax/log.hpp"

namespace msfax {
namespace {

constexpr int kWindow = 3;
constexpr double kSharedFraction = 0.05;

// Least-squares slope through (0, a), (1, b), (2, c).
double slope3(double a, double, double c) { return 0.5 * (c - a); }

}  // namespace

std::vector<double> cng_slope_differences(const Vector& ev) {
  require(ev.size() >= 2 * kWindow, "CNG scree test needs at least 6 eigenvalues");
  std::vector<double> diffs;
  for (Eigen::Index i = 0; i + 2 * kWindow <= ev.size(); ++i) {
    const double before = slope3(ev(i), ev(i + 1), ev(i + 2));
    const double after = slope3(ev(i + 3), ev(i + 4), ev(i + 5));
    diffs.push_back(after - before);
  }
  return diffs;
}

int cng_scree(const Vector& ev) {
  const auto diffs = cng_slope_differences(ev);
  const auto best = std::max_element(diffs.begin(), diffs.end());
  return static_cast<int>(best - diffs.begin()) + 2;
}

Vector correlation_eigenvalues(const Matrix& x) {
  const Matrix cov = x.transpose() * x / static_cast<double>(x.rows());
  const Vector inv_sd = cov.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  const Matrix corr = inv_sd.asDiagonal() * cov * inv_sd.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix> es(corr, Eigen::EigenvaluesOnly);
  return es.eigenvalues().reverse().cwiseMax(0.0);
}

FactorCountEstimate estimate_factor_counts(const MultiStudyDataset& data, const EcmOptions& opts) {
  require(data.is_centered(), "estimate_factor_counts requires column-centered data");
  FactorCountEstimate out;
  const std::size_t S = data.num_studies();
  for (std::size_t s = 0; s < S; ++s) out.total_per_study.push_back(cng_scree(correlation_eigenvalues(data.study(s))));
  const int k_star = *std::min_element(out.total_per_study.begin(), out.total_per_study.end());

  auto record = [&](const std::string& msg) {
    out.warnings.push_back(msg);
    warn(msg);
  };

  std::vector<int> j_star;
  for (std::size_t s = 0; s < S; ++s) {
    int js = out.total_per_study[s] - k_star;
    if (js < 1) {
      record("study " + std::to_string(s + 1) + ": t_s - k* = 0, using one study-specific factor for the first fit");
      js = 1;
    }
    j_star.push_back(js);
  }

  const EcmFit fit = fit_msfa(data, k_star, j_star, opts);
  Eigen::SelfAdjointEigenSolver<Matrix> es(fit.params.phi.outer(), Eigen::EigenvaluesOnly);
  const Vector ev = es.eigenvalues().reverse().cwiseMax(0.0);
  const double trace = ev.sum();
  int k = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    const double frac = trace > 0.0 ? ev(i) / trace : 0.0;
    if (i < k_star) out.shared_eigen_fractions.push_back(frac);
    if (frac > kSharedFraction) ++k;
  }
  out.k = std::clamp(k, 1, k_star);
  for (std::size_t s = 0; s < S; ++s) {
    int js = out.total_per_study[s] - out.k;
    if (js < 1) {
      record("study " + std::to_string(s + 1) + ": t_s - k = 0, clamping j_s to 1");
      js = 1;
    }
    out.j.push_back(js);
  }
  if (!validate_identifiability(static_cast<int>(data.num_predictors()), out.k, out.j).feasible) {
    fail(ErrorCode::infeasible_configuration, "estimated factor counts violate the identifiability conditions");
  }
  return out;
}

}  // namespace msfax
