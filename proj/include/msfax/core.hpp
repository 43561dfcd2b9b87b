#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "msfax/error.hpp"

namespace msfax {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Numerical tolerances used by the validation routines.
struct Tolerances {
  double centering = 1e-8;       // column means of a centered study
  double noise_identity = 1e-10; // gamma + eta == psi
  double associativity = 1e-12;  // component sums
  double rank_ratio = 1e-8;      // smallest / largest singular value of [Phi, Lambda_1..S]
  double symmetry = 1e-10;
};

inline constexpr Tolerances kTolerances{};

/// S centered observation matrices (rows = subjects) over a common set of p
/// predictors. Ordering of predictors and studies is positional.
class MultiStudyDataset {
 public:
  MultiStudyDataset() = default;
  MultiStudyDataset(std::vector<Matrix> studies,
                    std::vector<std::string> predictor_names = {},
                    std::vector<std::string> study_names = {});

  std::size_t num_studies() const { return studies_.size(); }
  std::size_t num_predictors() const { return p_; }
  std::size_t study_size(std::size_t s) const;
  std::size_t total_size() const;

  const Matrix& study(std::size_t s) const;
  const std::vector<Matrix>& studies() const { return studies_; }
  const std::vector<std::string>& predictor_names() const { return predictor_names_; }
  const std::vector<std::string>& study_names() const { return study_names_; }

  bool is_centered(double tol = kTolerances.centering) const;
  /// Copy with every study centered column-wise.
  MultiStudyDataset centered() const;

  /// X_s^T X_s / n_s (maximum-likelihood covariance of centered data).
  Matrix sample_covariance(std::size_t s) const;
  /// Rows of all studies stacked in study order.
  Matrix pooled() const;

 private:
  std::vector<Matrix> studies_;
  std::vector<std::string> predictor_names_;
  std::vector<std::string> study_names_;
  std::size_t p_ = 0;
};

/// p x m loadings. When constrained, entries strictly above the main diagonal
/// of the top m x m block are held at zero.
class LoadingsMatrix {
 public:
  LoadingsMatrix() = default;
  explicit LoadingsMatrix(Matrix values, bool constrained = true);

  const Matrix& values() const { return values_; }
  bool constrained() const { return constrained_; }
  Eigen::Index rows() const { return values_.rows(); }
  Eigen::Index cols() const { return values_.cols(); }
  /// values * values^T
  Matrix outer() const { return values_ * values_.transpose(); }

  /// True when (i, j) may be nonzero under the constraint.
  static bool is_free(Eigen::Index i, Eigen::Index j) { return j <= i; }
  static void apply_constraint(Matrix& values);

 private:
  Matrix values_;
  bool constrained_ = true;
};

/// MSFA parameters before the noise split: Phi, Lambda_s and Psi_s.
struct MsfaParameters {
  LoadingsMatrix phi;
  std::vector<LoadingsMatrix> lambdas;
  std::vector<Vector> psi;

  std::size_t num_studies() const { return lambdas.size(); }
  Eigen::Index num_predictors() const { return phi.rows(); }
  int shared_factors() const { return static_cast<int>(phi.cols()); }
  std::vector<int> specific_factors() const;

  /// Phi Phi^T + Lambda_s Lambda_s^T + Psi_s
  Matrix covariance(std::size_t s) const;
  void validate() const;
};

/// Full MSFA-X model with Psi_s = Gamma + H_s.
class MsfaxModel {
 public:
  MsfaxModel() = default;
  MsfaxModel(MsfaParameters params, Vector gamma, std::vector<Vector> etas,
             const Tolerances& tol = kTolerances);

  const MsfaParameters& parameters() const { return params_; }
  const LoadingsMatrix& phi() const { return params_.phi; }
  const std::vector<LoadingsMatrix>& lambdas() const { return params_.lambdas; }
  const std::vector<Vector>& psi() const { return params_.psi; }
  const Vector& gamma() const { return gamma_; }
  const std::vector<Vector>& etas() const { return etas_; }

  std::size_t num_studies() const { return params_.num_studies(); }
  Eigen::Index num_predictors() const { return params_.num_predictors(); }
  int shared_factors() const { return params_.shared_factors(); }
  std::vector<int> specific_factors() const { return params_.specific_factors(); }

 private:
  MsfaParameters params_;
  Vector gamma_;
  std::vector<Vector> etas_;
};

/// Symmetric p x p partial-correlation matrix with zero diagonal.
class GgmNetwork {
 public:
  GgmNetwork() = default;
  /// difference=true relaxes the [-1, 1] range check (benchmark subtraction
  /// networks).
  explicit GgmNetwork(Matrix partial_correlations, bool difference = false,
                      std::optional<double> threshold = std::nullopt);

  const Matrix& matrix() const { return values_; }
  Eigen::Index size() const { return values_.rows(); }
  bool thresholded() const { return threshold_.has_value(); }
  std::optional<double> threshold_value() const { return threshold_; }
  bool is_difference() const { return difference_; }
  bool empty() const;

 private:
  Matrix values_;
  bool difference_ = false;
  std::optional<double> threshold_;
};

struct IdentifiabilityCheck {
  std::int64_t free_params = 0;
  std::int64_t budget = 0;
  bool feasible = false;
};

IdentifiabilityCheck validate_identifiability(int p, int k, std::span<const int> j);

Matrix covariance_from_model(const MsfaxModel& model, std::size_t s);

bool is_positive_definite(const Matrix& m);
bool has_full_column_rank(const Matrix& m, double ratio = kTolerances.rank_ratio);
/// [Phi, Lambda_1, ..., Lambda_S]
Matrix stacked_loadings(const MsfaParameters& params);

}  // namespace msfax
