#include "msfax/netstats.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <map>

namespace msfax {

double fisher_threshold(long long n, int p, double family_alpha) {
  require(p >= 2, "fisher_threshold needs p >= 2");
  require(n > static_cast<long long>(p) + 1, "fisher_threshold needs n > p + 1");
  require(family_alpha > 0.0 && family_alpha < 1.0, "family_alpha must lie in (0, 1)");
  const double alpha = family_alpha / (static_cast<double>(p) * static_cast<double>(p - 1));
  const boost::math::normal standard;
  const double z = boost::math::quantile(boost::math::complement(standard, alpha));
  const double dof = static_cast<double>(n) - static_cast<double>(p - 2) - 3.0;
  return std::tanh(z / std::sqrt(dof));
}

GgmNetwork threshold_network(const GgmNetwork& net, double t) {
  require(t >= 0.0, "threshold must be non-negative");
  Matrix m = net.matrix();
  m = (m.array().abs() < t).select(0.0, m);
  return GgmNetwork(std::move(m), net.is_difference(), t);
}

Vector hub_scores(const GgmNetwork& net) {
  if (net.empty()) fail(ErrorCode::degenerate, "hub scores need at least one edge");
  const Matrix w = net.matrix().cwiseAbs();
  Eigen::SelfAdjointEigenSolver<Matrix> es(w);
  Vector v = es.eigenvectors().col(w.rows() - 1).cwiseAbs();
  return v / v.maxCoeff();
}

double project_onto_factor(const Vector& x, const Vector& factor) {
  require(x.size() == factor.size(), "projection needs vectors of equal length");
  const double norm = factor.norm();
  if (norm == 0.0) fail(ErrorCode::degenerate, "cannot project onto a zero factor");
  return factor.dot(x) / norm;
}

Matrix center_by_group(const Matrix& y, const std::vector<int>& groups) {
  if (groups.empty()) return y.rowwise() - y.colwise().mean();
  require(static_cast<Eigen::Index>(groups.size()) == y.rows(), "one group label per row is required");
  std::map<int, std::vector<Eigen::Index>> rows;
  for (Eigen::Index i = 0; i < y.rows(); ++i) rows[groups[static_cast<std::size_t>(i)]].push_back(i);
  Matrix out = y;
  for (const auto& [label, idx] : rows) {
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(y.cols());
    for (auto i : idx) mean += y.row(i);
    mean /= static_cast<double>(idx.size());
    for (auto i : idx) out.row(i) -= mean;
  }
  return out;
}

namespace {

Matrix impute_half_minimum(const Matrix& values, const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>& missing,
                           const char* which) {
  require(missing.rows() == values.rows() && missing.cols() == values.cols(),
          std::string(which) + " missing mask has the wrong shape");
  Matrix out = values;
  for (Eigen::Index c = 0; c < values.cols(); ++c) {
    double min_detected = std::numeric_limits<double>::infinity();
    Eigen::Index n_missing = 0;
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
      if (missing(r, c)) {
        ++n_missing;
        continue;
      }
      const double v = values(r, c);
      require(std::isfinite(v) && v > 0.0,
              std::string(which) + " column " + std::to_string(c + 1) + " has a non-positive measured value");
      min_detected = std::min(min_detected, v);
    }
    if (n_missing == values.rows()) {
      fail(ErrorCode::invalid_argument, std::string(which) + " column " + std::to_string(c + 1) + " is entirely missing");
    }
    if (2 * n_missing > values.rows()) {
      fail(ErrorCode::invalid_argument,
           std::string(which) + " column " + std::to_string(c + 1) + " has more than 50% missing values");
    }
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
      if (missing(r, c)) out(r, c) = 0.5 * min_detected;
    }
  }
  return out;
}

}  // namespace

Matrix log_ratios(const LogRatioInput& in) {
  require(in.fasting.rows() == in.post.rows() && in.fasting.cols() == in.post.cols(),
          "fasting and post matrices must have the same shape");
  const Matrix fasting = impute_half_minimum(in.fasting, in.fasting_missing, "fasting");
  const Matrix post = impute_half_minimum(in.post, in.post_missing, "post");
  return (post.array() / fasting.array()).log() / std::log(2.0);
}

Matrix log_ratio_preprocess(const LogRatioInput& in) { return center_by_group(log_ratios(in), in.groups); }

Matrix covariate_residualize(const Matrix& y, const Matrix& covariates, const std::vector<int>& groups) {
  require(y.rows() == covariates.rows(), "response and covariate rows must align");
  Matrix design(y.rows(), covariates.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(covariates.cols()) = covariates;
  Eigen::ColPivHouseholderQR<Matrix> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < design.cols()) fail(ErrorCode::singular_matrix, "covariate design is rank deficient");
  const Matrix beta = qr.solve(y);
  return center_by_group(y - design * beta, groups);
}

}  // namespace msfax
