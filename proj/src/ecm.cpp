#include "msfax/ecm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "msfax/log.hpp"

namespace msfax {

void EcmOptions::validate() const {
  require(max_iter >= 1, "max_iter must be at least 1");
  require(rel_tol > 0.0, "rel_tol must be positive");
  require(n_starts >= 1, "n_starts must be at least 1");
  require(ridge >= 0.0, "ridge must be non-negative");
}

namespace {

constexpr double kPsiFloor = 1e-6;  // relative to the sample variance
constexpr double kPerturbSd = 0.1;
constexpr double kInitEigenFloor = 1e-3;

struct StudyStats {
  Matrix xtx;  // X^T X
  double n = 0.0;
};

struct Moments {
  Matrix exz;  // sum_i x_i E[z_i | x_i]^T, p x m
  Matrix ezz;  // sum_i E[z_i z_i^T | x_i], m x m
};

Matrix joint(const Matrix& phi, const Matrix& lambda) {
  Matrix omega(phi.rows(), phi.cols() + lambda.cols());
  omega << phi, lambda;
  return omega;
}

double study_loglik(Matrix sigma, const Matrix& xtx, double n, double ridge) {
  sigma.diagonal().array() += ridge;
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) fail(ErrorCode::singular_matrix, "model covariance is not positive definite");
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double quad = llt.solve(xtx).trace();
  const double p = static_cast<double>(sigma.rows());
  return -0.5 * (n * p * std::log(2.0 * std::numbers::pi) + n * logdet + quad);
}

struct Posterior {
  Matrix beta;  // E[z | x] = beta x
  Matrix cov;   // Var[z | x]
};

// Posterior of z given x through the m x m precision I + Omega^T Psi^-1 Omega.
Posterior posterior(const Matrix& omega, const Vector& psi, double ridge) {
  const Eigen::Index m = omega.cols();
  const Matrix scaled = psi.cwiseInverse().asDiagonal() * omega;
  Matrix precision = Matrix::Identity(m, m) + omega.transpose() * scaled;
  precision.diagonal().array() += ridge;
  Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success) fail(ErrorCode::singular_matrix, "posterior precision is not positive definite");
  return {llt.solve(scaled.transpose()), llt.solve(Matrix::Identity(m, m))};
}

Moments expectation(const Matrix& omega, const Vector& psi, const StudyStats& st, double ridge) {
  const Posterior post = posterior(omega, psi, ridge);
  Moments out;
  out.exz = st.xtx * post.beta.transpose();
  out.ezz = st.n * post.cov + post.beta * out.exz;
  return out;
}

Vector solve_spd(Matrix a, const Vector& b, double ridge) {
  a.diagonal().array() += ridge;
  Eigen::LDLT<Matrix> ldlt(a);
  if (ldlt.info() != Eigen::Success) fail(ErrorCode::singular_matrix, "conditional maximization system is singular");
  return ldlt.solve(b);
}

void update_phi(Matrix& phi, const std::vector<Matrix>& lambdas, const std::vector<Vector>& psi,
                const std::vector<Moments>& mom, double ridge) {
  const Eigen::Index p = phi.rows(), k = phi.cols();
  for (Eigen::Index q = 0; q < p; ++q) {
    const Eigen::Index f = std::min(q + 1, k);
    Matrix a = Matrix::Zero(f, f);
    Vector b = Vector::Zero(f);
    for (std::size_t s = 0; s < lambdas.size(); ++s) {
      const double w = 1.0 / psi[s](q);
      const Eigen::Index js = lambdas[s].cols();
      a += w * mom[s].ezz.topLeftCorner(f, f);
      b += w * (mom[s].exz.row(q).head(f) - lambdas[s].row(q) * mom[s].ezz.block(k, 0, js, f)).transpose();
    }
    phi.row(q).setZero();
    phi.row(q).head(f) = solve_spd(std::move(a), b, ridge).transpose();
  }
}

void update_lambda(Matrix& lambda, const Matrix& phi, const Moments& mom, double ridge) {
  const Eigen::Index p = lambda.rows(), js = lambda.cols(), k = phi.cols();
  for (Eigen::Index q = 0; q < p; ++q) {
    const Eigen::Index g = std::min(q + 1, js);
    const Matrix a = mom.ezz.block(k, k, g, g);
    const Vector b = (mom.exz.row(q).segment(k, g) - phi.row(q) * mom.ezz.block(0, k, k, g)).transpose();
    lambda.row(q).setZero();
    lambda.row(q).head(g) = solve_spd(a, b, ridge).transpose();
  }
}

void update_psi(Vector& psi, const Matrix& omega, const Moments& mom, const StudyStats& st) {
  for (Eigen::Index q = 0; q < psi.size(); ++q) {
    const auto w = omega.row(q);
    const double value = (st.xtx(q, q) - 2.0 * w.dot(mom.exz.row(q)) + (w * mom.ezz * w.transpose())(0, 0)) / st.n;
    const double floor = std::max(kPsiFloor * st.xtx(q, q) / st.n, 1e-12);
    psi(q) = std::max(value, floor);
  }
}

// Rotate loadings so the top m x m block is lower triangular; V V^T is unchanged.
Matrix to_lower_triangular(const Matrix& v) {
  const Eigen::Index m = v.cols();
  Eigen::HouseholderQR<Matrix> qr(v.topRows(m).transpose());
  Matrix rotated = v * Matrix(qr.householderQ());
  LoadingsMatrix::apply_constraint(rotated);
  return rotated;
}

// Eigenpairs in descending order.
std::pair<Vector, Matrix> descending_eigen(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  return {es.eigenvalues().reverse(), es.eigenvectors().rowwise().reverse()};
}

// Principal-component start in the probabilistic-PCA form V (E - sigma^2)^1/2,
// sigma^2 being the mean of the discarded eigenvalues.
Matrix pca_loadings(const Matrix& cov, Eigen::Index m, Eigen::Index discard_from) {
  const Vector sd = cov.diagonal().cwiseMax(1e-12).cwiseSqrt();
  const Matrix corr = sd.cwiseInverse().asDiagonal() * cov * sd.cwiseInverse().asDiagonal();
  auto [values, vectors] = descending_eigen(corr);
  const Eigen::Index p = values.size();
  discard_from = std::clamp<Eigen::Index>(discard_from, m, p);
  double noise = 0.0;
  if (discard_from < p) noise = std::max(0.0, values.tail(p - discard_from).mean());
  Vector scale(m);
  for (Eigen::Index c = 0; c < m; ++c) scale(c) = std::sqrt(std::max(values(c) - noise, kInitEigenFloor));
  return sd.asDiagonal() * vectors.leftCols(m) * scale.asDiagonal();
}

struct StartResult {
  Matrix phi;
  std::vector<Matrix> lambdas;
  std::vector<Vector> psi;
  std::vector<double> trace;
  bool converged = false;
  int n_iter = 0;
};

StartResult run_start(const std::vector<StudyStats>& stats, Matrix phi, std::vector<Matrix> lambdas,
                      std::vector<Vector> psi, const EcmOptions& opts) {
  const std::size_t S = stats.size();
  StartResult out;
  std::vector<Moments> mom(S);
  for (int it = 0; it < opts.max_iter; ++it) {
    double ll = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
      const Matrix omega = joint(phi, lambdas[s]);
      Matrix sigma = omega * omega.transpose();
      sigma.diagonal() += psi[s];
      ll += study_loglik(std::move(sigma), stats[s].xtx, stats[s].n, opts.ridge);
      mom[s] = expectation(omega, psi[s], stats[s], opts.ridge);
    }
    out.trace.push_back(ll);
    out.n_iter = it + 1;
    if (it > 0) {
      const double prev = out.trace[out.trace.size() - 2];
      if (std::abs(ll - prev) < opts.rel_tol * std::abs(prev)) {
        out.converged = true;
        break;
      }
    }
    if (it + 1 == opts.max_iter) break;

    update_phi(phi, lambdas, psi, mom, opts.ridge);
    for (std::size_t s = 0; s < S; ++s) update_lambda(lambdas[s], phi, mom[s], opts.ridge);
    for (std::size_t s = 0; s < S; ++s) update_psi(psi[s], joint(phi, lambdas[s]), mom[s], stats[s]);
  }
  out.phi = std::move(phi);
  out.lambdas = std::move(lambdas);
  out.psi = std::move(psi);
  return out;
}

void perturb(Matrix& loadings, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, kPerturbSd);
  for (Eigen::Index c = 0; c < loadings.cols(); ++c) {
    for (Eigen::Index r = 0; r < loadings.rows(); ++r) {
      if (LoadingsMatrix::is_free(r, c)) loadings(r, c) += noise(rng);
    }
  }
}

}  // namespace

void canonicalize_signs(Matrix& loadings) {
  for (Eigen::Index c = 0; c < loadings.cols(); ++c) {
    Eigen::Index arg = 0;
    loadings.col(c).cwiseAbs().maxCoeff(&arg);
    if (loadings(arg, c) < 0.0) loadings.col(c) *= -1.0;
  }
}

double observed_loglik(const MsfaParameters& params, const MultiStudyDataset& data, double ridge) {
  params.validate();
  require(params.num_studies() == data.num_studies(), "model and data disagree on the number of studies");
  require(static_cast<std::size_t>(params.num_predictors()) == data.num_predictors(),
          "model and data disagree on the number of predictors");
  double ll = 0.0;
  for (std::size_t s = 0; s < data.num_studies(); ++s) {
    const Matrix& x = data.study(s);
    ll += study_loglik(params.covariance(s), x.transpose() * x, static_cast<double>(x.rows()), ridge);
  }
  return ll;
}

ConditionalMoments conditional_moments(const Matrix& phi, const Matrix& lambda, const Vector& psi, const Vector& x) {
  require(phi.rows() == lambda.rows() && psi.size() == phi.rows() && x.size() == phi.rows(),
          "conditional_moments shape mismatch");
  require((psi.array() > 0.0).all(), "psi entries must be positive");
  const Posterior post = posterior(joint(phi, lambda), psi, 0.0);
  ConditionalMoments out;
  out.mean = post.beta * x;
  out.second_moment = post.cov + out.mean * out.mean.transpose();
  return out;
}

EcmFit fit_msfa(const MultiStudyDataset& data, int k, std::span<const int> j, const EcmOptions& opts) {
  opts.validate();
  const std::size_t S = data.num_studies();
  const int p = static_cast<int>(data.num_predictors());
  require(j.size() == S, "need one specific-factor count per study");
  require(data.is_centered(), "fit_msfa requires column-centered data");
  for (int js : j) require(js >= 1, "every j_s must be positive");
  require(k >= 1, "k must be positive");
  if (!validate_identifiability(p, k, j).feasible) {
    fail(ErrorCode::infeasible_configuration, "factor configuration violates the identifiability conditions");
  }
  for (std::size_t s = 0; s < S; ++s) {
    require(static_cast<int>(data.study_size(s)) > k + j[s],
            "study " + std::to_string(s + 1) + " needs more observations than k + j_s");
  }

  std::vector<StudyStats> stats(S);
  Matrix pooled_cov = Matrix::Zero(p, p);
  for (std::size_t s = 0; s < S; ++s) {
    const Matrix& x = data.study(s);
    stats[s].xtx = x.transpose() * x;
    stats[s].n = static_cast<double>(x.rows());
    pooled_cov += stats[s].xtx;
    if (opts.ridge == 0.0) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(stats[s].xtx, Eigen::EigenvaluesOnly);
      const auto& ev = es.eigenvalues();
      if (ev(0) <= 1e-12 * std::max(ev(ev.size() - 1), 1e-300)) {
        fail(ErrorCode::singular_matrix, "sample covariance of study " + std::to_string(s + 1) + " is singular");
      }
    }
  }
  pooled_cov /= static_cast<double>(data.total_size());

  int total = k;
  for (int js : j) total += js;

  Matrix phi0 = to_lower_triangular(pca_loadings(pooled_cov, k, total));
  std::vector<Matrix> lambda0(S);
  std::vector<Vector> psi0(S);
  for (std::size_t s = 0; s < S; ++s) {
    const Matrix cov = stats[s].xtx / stats[s].n;
    Matrix resid = cov - phi0 * phi0.transpose();
    resid.diagonal() = resid.diagonal().cwiseMax(1e-6 * cov.diagonal());
    lambda0[s] = to_lower_triangular(pca_loadings(resid, j[s], j[s]));
    psi0[s] = 0.5 * cov.diagonal();
  }

  StartResult best;
  int best_start = -1;
  for (int start = 0; start < opts.n_starts; ++start) {
    Matrix phi = phi0;
    std::vector<Matrix> lambdas = lambda0;
    if (start > 0) {
      std::seed_seq seq{static_cast<std::uint32_t>(opts.seed), static_cast<std::uint32_t>(opts.seed >> 32),
                        static_cast<std::uint32_t>(start)};
      std::mt19937_64 rng(seq);
      perturb(phi, rng);
      for (auto& l : lambdas) perturb(l, rng);
    }
    StartResult r = run_start(stats, std::move(phi), std::move(lambdas), psi0, opts);
    if (best_start < 0 || r.trace.back() > best.trace.back()) {
      best = std::move(r);
      best_start = start;
    }
  }
  if (!best.converged) {
    warn("ECM did not converge within " + std::to_string(opts.max_iter) + " iterations");
  }

  canonicalize_signs(best.phi);
  for (auto& l : best.lambdas) canonicalize_signs(l);

  EcmFit fit;
  fit.params.phi = LoadingsMatrix(std::move(best.phi));
  for (std::size_t s = 0; s < S; ++s) fit.params.lambdas.emplace_back(std::move(best.lambdas[s]));
  fit.params.psi = std::move(best.psi);
  fit.loglik_trace = std::move(best.trace);
  fit.converged = best.converged;
  fit.n_iter = best.n_iter;
  fit.best_start = best_start;
  return fit;
}

}  // namespace msfax
