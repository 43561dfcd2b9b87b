#include "msfax/core.hpp"

#include <algorithm>
#include <numeric>

namespace msfax {

MultiStudyDataset::MultiStudyDataset(std::vector<Matrix> studies,
                                     std::vector<std::string> predictor_names,
                                     std::vector<std::string> study_names)
    : studies_(std::move(studies)),
      predictor_names_(std::move(predictor_names)),
      study_names_(std::move(study_names)) {
  require(!studies_.empty(), "dataset needs at least one study");
  p_ = static_cast<std::size_t>(studies_.front().cols());
  require(p_ >= 1, "dataset needs at least one predictor");
  for (std::size_t s = 0; s < studies_.size(); ++s) {
    require(static_cast<std::size_t>(studies_[s].cols()) == p_,
            "study " + std::to_string(s + 1) + " has a different number of predictors");
    require(studies_[s].rows() >= 2,
            "study " + std::to_string(s + 1) + " has fewer than 2 observations");
    require(studies_[s].allFinite(), "study " + std::to_string(s + 1) + " contains non-finite values");
  }
  if (predictor_names_.empty()) {
    for (std::size_t i = 0; i < p_; ++i) predictor_names_.push_back("V" + std::to_string(i + 1));
  }
  if (study_names_.empty()) {
    for (std::size_t s = 0; s < studies_.size(); ++s) study_names_.push_back("study_" + std::to_string(s + 1));
  }
  require(predictor_names_.size() == p_, "predictor name count does not match p");
  require(study_names_.size() == studies_.size(), "study name count does not match S");
}

std::size_t MultiStudyDataset::study_size(std::size_t s) const {
  return static_cast<std::size_t>(study(s).rows());
}

std::size_t MultiStudyDataset::total_size() const {
  std::size_t n = 0;
  for (const auto& x : studies_) n += static_cast<std::size_t>(x.rows());
  return n;
}

const Matrix& MultiStudyDataset::study(std::size_t s) const {
  if (s >= studies_.size()) fail(ErrorCode::out_of_range, "study index " + std::to_string(s) + " out of range");
  return studies_[s];
}

bool MultiStudyDataset::is_centered(double tol) const {
  return std::all_of(studies_.begin(), studies_.end(), [tol](const Matrix& x) {
    return (x.colwise().mean().array().abs() <= tol).all();
  });
}

MultiStudyDataset MultiStudyDataset::centered() const {
  std::vector<Matrix> out;
  out.reserve(studies_.size());
  for (const auto& x : studies_) out.emplace_back(x.rowwise() - x.colwise().mean());
  return MultiStudyDataset(std::move(out), predictor_names_, study_names_);
}

Matrix MultiStudyDataset::sample_covariance(std::size_t s) const {
  const Matrix& x = study(s);
  return (x.transpose() * x) / static_cast<double>(x.rows());
}

Matrix MultiStudyDataset::pooled() const {
  Matrix out(static_cast<Eigen::Index>(total_size()), static_cast<Eigen::Index>(p_));
  Eigen::Index row = 0;
  for (const auto& x : studies_) {
    out.middleRows(row, x.rows()) = x;
    row += x.rows();
  }
  return out;
}

LoadingsMatrix::LoadingsMatrix(Matrix values, bool constrained)
    : values_(std::move(values)), constrained_(constrained) {
  require(values_.cols() <= values_.rows(), "loadings need m <= p");
  if (constrained_) apply_constraint(values_);
}

void LoadingsMatrix::apply_constraint(Matrix& values) {
  for (Eigen::Index j = 1; j < values.cols(); ++j) {
    values.col(j).head(std::min(j, values.rows())).setZero();
  }
}

std::vector<int> MsfaParameters::specific_factors() const {
  std::vector<int> j;
  j.reserve(lambdas.size());
  for (const auto& l : lambdas) j.push_back(static_cast<int>(l.cols()));
  return j;
}

Matrix MsfaParameters::covariance(std::size_t s) const {
  if (s >= lambdas.size()) fail(ErrorCode::out_of_range, "study index " + std::to_string(s) + " out of range");
  Matrix sigma = phi.outer() + lambdas[s].outer();
  sigma.diagonal() += psi[s];
  return sigma;
}

void MsfaParameters::validate() const {
  const Eigen::Index p = phi.rows();
  require(p >= 1 && phi.cols() >= 1, "phi must be non-empty");
  require(!lambdas.empty(), "model needs at least one study");
  require(psi.size() == lambdas.size(), "psi count does not match the number of studies");
  for (std::size_t s = 0; s < lambdas.size(); ++s) {
    require(lambdas[s].rows() == p && lambdas[s].cols() >= 1, "lambda shape mismatch for study " + std::to_string(s + 1));
    require(psi[s].size() == p, "psi length mismatch for study " + std::to_string(s + 1));
    require((psi[s].array() > 0.0).all(), "psi entries must be positive");
  }
}

MsfaxModel::MsfaxModel(MsfaParameters params, Vector gamma, std::vector<Vector> etas, const Tolerances& tol)
    : params_(std::move(params)), gamma_(std::move(gamma)), etas_(std::move(etas)) {
  params_.validate();
  const Eigen::Index p = params_.num_predictors();
  const std::size_t S = params_.num_studies();
  require(gamma_.size() == p, "gamma length does not match p");
  require(etas_.size() == S, "eta count does not match the number of studies");
  require((gamma_.array() > 0.0).all(), "gamma entries must be positive");
  for (std::size_t s = 0; s < S; ++s) {
    require(etas_[s].size() == p, "eta length does not match p");
    require((etas_[s].array() >= 0.0).all(), "eta entries must be non-negative");
    const double gap = (gamma_ + etas_[s] - params_.psi[s]).cwiseAbs().maxCoeff();
    require(gap <= tol.noise_identity, "gamma + eta must equal psi");
    require((gamma_.array() <= params_.psi[s].array() + tol.noise_identity).all(),
            "gamma must not exceed psi in any study");
  }
  const auto j = params_.specific_factors();
  const int total = params_.shared_factors() + std::accumulate(j.begin(), j.end(), 0);
  if (total > p || total <= static_cast<int>(S)) {
    fail(ErrorCode::infeasible_configuration, "factor counts violate k + sum(j) <= p and k + sum(j) > S");
  }
}

GgmNetwork::GgmNetwork(Matrix values, bool difference, std::optional<double> threshold)
    : values_(std::move(values)), difference_(difference), threshold_(threshold) {
  require(values_.rows() == values_.cols(), "network matrix must be square");
  require(values_.allFinite(), "network matrix must be finite");
  require((values_ - values_.transpose()).cwiseAbs().maxCoeff() <= kTolerances.symmetry,
          "network matrix must be symmetric");
  values_ = (0.5 * (values_ + values_.transpose())).eval();
  values_.diagonal().setZero();
  if (!difference_) {
    require(values_.cwiseAbs().maxCoeff() <= 1.0 + 1e-12, "partial correlations must lie in [-1, 1]");
    values_ = values_.cwiseMax(-1.0).cwiseMin(1.0);
  }
}

bool GgmNetwork::empty() const { return values_.size() == 0 || (values_.array() == 0.0).all(); }

IdentifiabilityCheck validate_identifiability(int p, int k, std::span<const int> j) {
  require(p >= 1, "p must be positive");
  require(k >= 1, "k must be positive");
  require(!j.empty(), "need at least one study");
  for (int js : j) require(js >= 1, "every j_s must be positive");

  const std::int64_t P = p, K = k, S = static_cast<std::int64_t>(j.size());
  IdentifiabilityCheck out;
  out.free_params = P * K - K * (K - 1) / 2 + (S + 1) * P;
  std::int64_t total = K;
  for (int js : j) {
    const std::int64_t J = js;
    out.free_params += P * J - J * (J - 1) / 2;
    total += J;
  }
  out.budget = S * P * (P + 1) / 2;
  out.feasible = out.free_params <= out.budget && total <= P && total > S;
  return out;
}

Matrix covariance_from_model(const MsfaxModel& model, std::size_t s) {
  if (s >= model.num_studies()) fail(ErrorCode::out_of_range, "study index " + std::to_string(s) + " out of range");
  Matrix sigma = model.phi().outer() + model.lambdas()[s].outer();
  sigma.diagonal() += model.gamma() + model.etas()[s];
  return sigma;
}

bool is_positive_definite(const Matrix& m) {
  if (m.rows() != m.cols() || !m.allFinite()) return false;
  Eigen::LLT<Matrix> llt(m);
  return llt.info() == Eigen::Success;
}

bool has_full_column_rank(const Matrix& m, double ratio) {
  if (m.cols() == 0) return true;
  if (m.cols() > m.rows()) return false;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  return sv(0) > 0.0 && sv(sv.size() - 1) > ratio * sv(0);
}

Matrix stacked_loadings(const MsfaParameters& params) {
  Eigen::Index cols = params.phi.cols();
  for (const auto& l : params.lambdas) cols += l.cols();
  Matrix omega(params.phi.rows(), cols);
  omega.leftCols(params.phi.cols()) = params.phi.values();
  Eigen::Index c = params.phi.cols();
  for (const auto& l : params.lambdas) {
    omega.middleCols(c, l.cols()) = l.values();
    c += l.cols();
  }
  return omega;
}

}  // namespace msfax
