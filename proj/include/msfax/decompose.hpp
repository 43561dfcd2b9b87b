#pragma once

#include <vector>

#include "msfax/core.hpp"
#include "msfax/ecm.hpp"

namespace msfax {

struct NoiseSplit {
  Vector gamma;
  std::vector<Vector> etas;
};

/// gamma_q = 0.5 * min_s psi_sq, eta_sq = psi_sq - gamma_q: the midpoint of
/// the interval (0, min_s psi_sq) the likelihood cannot resolve.
NoiseSplit split_noise(const std::vector<Vector>& psi);

/// Half-width of the unidentifiable interval for each predictor,
/// 0.5 * min_s psi_sq.
Vector noise_split_margin(const std::vector<Vector>& psi);

struct PrecisionPair {
  Matrix shared;
  std::vector<Matrix> specific;
};

/// (Phi Phi^T + Gamma)^-1
Matrix shared_precision(const LoadingsMatrix& phi, const Vector& gamma);
/// (Lambda_s Lambda_s^T + H_s)^-1. Zero eta entries get a 1e-10 ridge.
Matrix study_precision(const LoadingsMatrix& lambda, const Vector& eta);

/// -theta_ij / sqrt(theta_ii theta_jj) off the diagonal.
GgmNetwork partial_correlations(const Matrix& theta);

struct NetworkSet {
  GgmNetwork shared;
  std::vector<GgmNetwork> specific;
};

struct FitNetworks {
  NetworkSet networks;
  PrecisionPair precision;
  MsfaxModel model;
};

FitNetworks networks_from_fit(const EcmFit& fit);
FitNetworks networks_from_parameters(const MsfaParameters& params);
/// Networks implied by a complete model (its own gamma / etas are used).
NetworkSet networks_from_model(const MsfaxModel& model);

}  // namespace msfax
