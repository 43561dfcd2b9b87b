#include "msfax/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "msfax/log.hpp"

namespace msfax {

void GlassoOptions::validate() const {
  require(!lambda_grid.empty(), "lambda grid must not be empty");
  for (double l : lambda_grid) require(l >= 0.0 && std::isfinite(l), "lambda values must be non-negative");
  require(max_iter >= 1, "max_iter must be at least 1");
  require(tol > 0.0, "tol must be positive");
}

namespace {

constexpr int kInnerMaxIter = 10000;
constexpr double kInnerTol = 1e-12;

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

// min_b 0.5 b^T V b - c^T b + lambda |b|_1, warm started at beta.
void lasso(const Matrix& v, const Vector& c, double lambda, Vector& beta) {
  if (lambda == 0.0) {
    beta = v.ldlt().solve(c);
    return;
  }
  Vector vb = v * beta;
  for (int it = 0; it < kInnerMaxIter; ++it) {
    double max_delta = 0.0;
    double scale = 0.0;
    for (Eigen::Index i = 0; i < beta.size(); ++i) {
      const double old = beta(i);
      const double r = c(i) - vb(i) + v(i, i) * old;
      const double next = soft_threshold(r, lambda) / v(i, i);
      if (next != old) {
        vb += v.col(i) * (next - old);
        beta(i) = next;
        max_delta = std::max(max_delta, std::abs(next - old) * v(i, i));
      }
      scale = std::max(scale, std::abs(next));
    }
    if (max_delta <= kInnerTol * std::max(1.0, scale)) return;
  }
}

std::vector<Eigen::Index> others(Eigen::Index p, Eigen::Index j) {
  std::vector<Eigen::Index> idx;
  idx.reserve(static_cast<std::size_t>(p - 1));
  for (Eigen::Index i = 0; i < p; ++i) {
    if (i != j) idx.push_back(i);
  }
  return idx;
}

Matrix precision_from_blocks(const Matrix& w, const Matrix& betas) {
  const Eigen::Index p = w.rows();
  Matrix theta = Matrix::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const auto idx = others(p, j);
    const Vector beta = betas.col(j).head(p - 1);
    Vector w12(p - 1);
    for (Eigen::Index a = 0; a < p - 1; ++a) w12(a) = w(idx[static_cast<std::size_t>(a)], j);
    const double tjj = 1.0 / (w(j, j) - w12.dot(beta));
    theta(j, j) = tjj;
    for (Eigen::Index a = 0; a < p - 1; ++a) theta(idx[static_cast<std::size_t>(a)], j) = -beta(a) * tjj;
  }
  // Average the two column estimates of every entry; a zero in either keeps it zero.
  Matrix sym = 0.5 * (theta + theta.transpose());
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i < p; ++i) {
      if (i != j && (theta(i, j) == 0.0 || theta(j, i) == 0.0)) sym(i, j) = 0.0;
    }
  }
  return sym;
}

}  // namespace

double glasso_kkt_residual(const Matrix& s, const Matrix& theta, double lambda) {
  Eigen::LLT<Matrix> llt(theta);
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  const Matrix w = llt.solve(Matrix::Identity(theta.rows(), theta.cols()));
  const Matrix g = w - s;
  double worst = 0.0;
  for (Eigen::Index j = 0; j < theta.cols(); ++j) {
    for (Eigen::Index i = 0; i < theta.rows(); ++i) {
      double r;
      if (i == j) {
        r = std::abs(g(i, j));
      } else if (theta(i, j) != 0.0) {
        r = std::abs(g(i, j) - lambda * (theta(i, j) > 0.0 ? 1.0 : -1.0));
      } else {
        r = std::max(0.0, std::abs(g(i, j)) - lambda);
      }
      worst = std::max(worst, r);
    }
  }
  return worst;
}

Matrix graphical_lasso(const Matrix& s, double lambda, const GlassoOptions& opts) {
  require(opts.max_iter >= 1 && opts.tol > 0.0, "invalid glasso options");
  require(s.rows() == s.cols() && s.rows() >= 1, "sample covariance must be square");
  require((s - s.transpose()).cwiseAbs().maxCoeff() <= 1e-8 * std::max(1.0, s.cwiseAbs().maxCoeff()),
          "sample covariance must be symmetric");
  require(lambda >= 0.0 && std::isfinite(lambda), "lambda must be non-negative");
  require((s.diagonal().array() > 0.0).all(), "sample covariance needs a positive diagonal");
  if (lambda == 0.0 && !is_positive_definite(s)) {
    fail(ErrorCode::singular_matrix, "graphical lasso with lambda = 0 needs a positive definite covariance");
  }
  const Eigen::Index p = s.rows();
  if (p == 1) return Matrix::Constant(1, 1, 1.0 / s(0, 0));

  Matrix w = 0.5 * (s + s.transpose());
  Matrix betas = Matrix::Zero(p - 1, p);
  Matrix v(p - 1, p - 1);
  Vector c(p - 1);
  for (int it = 0; it < opts.max_iter; ++it) {
    for (Eigen::Index j = 0; j < p; ++j) {
      const auto idx = others(p, j);
      for (Eigen::Index a = 0; a < p - 1; ++a) {
        const auto ia = idx[static_cast<std::size_t>(a)];
        c(a) = s(ia, j);
        for (Eigen::Index b = 0; b < p - 1; ++b) v(a, b) = w(ia, idx[static_cast<std::size_t>(b)]);
      }
      Vector beta = betas.col(j);
      lasso(v, c, lambda, beta);
      betas.col(j) = beta;
      const Vector w12 = v * beta;
      for (Eigen::Index a = 0; a < p - 1; ++a) {
        const auto ia = idx[static_cast<std::size_t>(a)];
        w(ia, j) = w12(a);
        w(j, ia) = w12(a);
      }
    }
    Matrix theta = precision_from_blocks(w, betas);
    if (glasso_kkt_residual(s, theta, lambda) < opts.tol) return theta;
  }
  fail(ErrorCode::not_converged, "graphical lasso did not converge within max_iter sweeps");
}

BicSelection bic_select(const Matrix& s, long long n, const GlassoOptions& opts) {
  opts.validate();
  require(n >= 1, "sample size must be positive");
  BicSelection out;
  out.grid = opts.lambda_grid;
  out.bic.assign(out.grid.size(), std::numeric_limits<double>::quiet_NaN());
  const double log_n = std::log(static_cast<double>(n));
  double best = std::numeric_limits<double>::infinity();
  bool found = false;
  for (std::size_t g = 0; g < out.grid.size(); ++g) {
    const double lambda = out.grid[g];
    if (lambda == 0.0 && !is_positive_definite(s)) {
      warn("skipping lambda = 0: sample covariance is not positive definite");
      continue;
    }
    Matrix theta = graphical_lasso(s, lambda, opts);
    Eigen::LLT<Matrix> llt(theta);
    const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    const double loglik = 0.5 * static_cast<double>(n) * (logdet - (s * theta).trace());
    long long nonzero = 0;
    for (Eigen::Index j = 1; j < theta.cols(); ++j) {
      for (Eigen::Index i = 0; i < j; ++i) nonzero += theta(i, j) != 0.0;
    }
    const double bic = -2.0 * loglik + log_n * static_cast<double>(nonzero);
    out.bic[g] = bic;
    if (!found || bic < best || (bic == best && lambda > out.lambda)) {
      best = bic;
      out.lambda = lambda;
      out.precision = std::move(theta);
      found = true;
    }
  }
  if (!found) fail(ErrorCode::singular_matrix, "no grid point could be evaluated");
  return out;
}

NetworkSet benchmark_networks(const MultiStudyDataset& data, const GlassoOptions& opts) {
  opts.validate();
  require(data.is_centered(), "benchmark_networks requires column-centered data");
  std::vector<GgmNetwork> per_study;
  for (std::size_t s = 0; s < data.num_studies(); ++s) {
    const auto sel = bic_select(data.sample_covariance(s), static_cast<long long>(data.study_size(s)), opts);
    per_study.push_back(partial_correlations(sel.precision));
  }
  const Matrix pooled = data.pooled();
  const Matrix pooled_cov = pooled.transpose() * pooled / static_cast<double>(pooled.rows());
  const auto sel = bic_select(pooled_cov, static_cast<long long>(pooled.rows()), opts);

  NetworkSet out;
  out.shared = partial_correlations(sel.precision);
  for (const auto& a : per_study) {
    Matrix diff = a.matrix() - out.shared.matrix();
    diff.diagonal().setZero();
    out.specific.emplace_back(std::move(diff), true);
  }
  return out;
}

}  // namespace msfax
