#include "msfax/decompose.hpp"

#include <cmath>

#include "msfax/log.hpp"

namespace msfax {
namespace {

constexpr double kZeroEtaRidge = 1e-10;

Matrix inverse_spd(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) fail(ErrorCode::singular_matrix, "matrix is not positive definite");
  Matrix inv = llt.solve(Matrix::Identity(m.rows(), m.cols()));
  return 0.5 * (inv + inv.transpose());
}

}  // namespace

NoiseSplit split_noise(const std::vector<Vector>& psi) {
  require(!psi.empty(), "split_noise needs at least one study");
  const Eigen::Index p = psi.front().size();
  Vector min_psi = psi.front();
  for (const auto& v : psi) {
    require(v.size() == p, "psi vectors must share a length");
    require((v.array() > 0.0).all(), "psi entries must be positive");
    min_psi = min_psi.cwiseMin(v);
  }
  NoiseSplit out;
  out.gamma = 0.5 * min_psi;
  for (const auto& v : psi) out.etas.emplace_back(v - out.gamma);
  return out;
}

Vector noise_split_margin(const std::vector<Vector>& psi) { return split_noise(psi).gamma; }

Matrix shared_precision(const LoadingsMatrix& phi, const Vector& gamma) {
  require(gamma.size() == phi.rows(), "gamma length does not match phi");
  require((gamma.array() > 0.0).all(), "gamma entries must be positive");
  Matrix cov = phi.outer();
  cov.diagonal() += gamma;
  return inverse_spd(cov);
}

Matrix study_precision(const LoadingsMatrix& lambda, const Vector& eta) {
  require(eta.size() == lambda.rows(), "eta length does not match lambda");
  require((eta.array() >= 0.0).all(), "eta entries must be non-negative");
  Vector diag = eta;
  if ((eta.array() == 0.0).any()) {
    warn("study-specific noise has zero entries; adding a 1e-10 ridge before inversion");
    diag = (eta.array() == 0.0).select(Vector::Constant(eta.size(), kZeroEtaRidge), eta);
  }
  Matrix cov = lambda.outer();
  cov.diagonal() += diag;
  return inverse_spd(cov);
}

GgmNetwork partial_correlations(const Matrix& theta) {
  require(theta.rows() == theta.cols(), "precision matrix must be square");
  require((theta - theta.transpose()).cwiseAbs().maxCoeff() <= 1e-8 * std::max(1.0, theta.cwiseAbs().maxCoeff()),
          "precision matrix must be symmetric");
  require((theta.diagonal().array() > 0.0).all(), "precision diagonal must be positive");
  const Vector inv_sd = theta.diagonal().cwiseSqrt().cwiseInverse();
  Matrix rho = -(inv_sd.asDiagonal() * theta * inv_sd.asDiagonal());
  rho = (0.5 * (rho + rho.transpose())).eval();
  rho.diagonal().setZero();
  return GgmNetwork(rho.cwiseMax(-1.0).cwiseMin(1.0));
}

namespace {

FitNetworks from_model(MsfaxModel model) {
  FitNetworks out;
  out.precision.shared = shared_precision(model.phi(), model.gamma());
  out.networks.shared = partial_correlations(out.precision.shared);
  for (std::size_t s = 0; s < model.num_studies(); ++s) {
    out.precision.specific.push_back(study_precision(model.lambdas()[s], model.etas()[s]));
    out.networks.specific.push_back(partial_correlations(out.precision.specific.back()));
  }
  out.model = std::move(model);
  return out;
}

}  // namespace

FitNetworks networks_from_parameters(const MsfaParameters& params) {
  params.validate();
  NoiseSplit split = split_noise(params.psi);
  if (!has_full_column_rank(stacked_loadings(params))) {
    warn("stacked loadings [Phi, Lambda_1..S] are not of full column rank");
  }
  return from_model(MsfaxModel(params, std::move(split.gamma), std::move(split.etas)));
}

FitNetworks networks_from_fit(const EcmFit& fit) { return networks_from_parameters(fit.params); }

NetworkSet networks_from_model(const MsfaxModel& model) { return from_model(model).networks; }

}  // namespace msfax
