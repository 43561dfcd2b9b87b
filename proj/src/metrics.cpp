#include "msfax/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace msfax {
namespace {

Vector lower_triangle(const Matrix& m) {
  const Eigen::Index p = m.rows();
  Vector out(p * (p - 1) / 2);
  Eigen::Index idx = 0;
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = j + 1; i < p; ++i) out(idx++) = m(i, j);
  }
  return out;
}

void check_pair(const GgmNetwork& a, const GgmNetwork& b) {
  require(a.size() == b.size(), "networks must have the same number of nodes");
}

template <typename F>
double or_nan(F&& f) {
  try {
    return f();
  } catch (const Error&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

double matrix_rv(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "matrix_rv needs matrices of matching shape");
  Matrix aa = a * a.transpose();
  Matrix bb = b * b.transpose();
  aa.diagonal().setZero();
  bb.diagonal().setZero();
  const double na = aa.squaredNorm();
  const double nb = bb.squaredNorm();
  if (na == 0.0 || nb == 0.0) fail(ErrorCode::degenerate, "matrix_rv is undefined for matrices without off-diagonal cross products");
  return aa.cwiseProduct(bb).sum() / std::sqrt(na * nb);
}

double relative_euclidean(const GgmNetwork& estimate, const GgmNetwork& truth) {
  check_pair(estimate, truth);
  const Vector g = lower_triangle(truth.matrix());
  const double denom = g.norm();
  if (denom == 0.0) fail(ErrorCode::degenerate, "relative Euclidean distance needs a nonzero truth network");
  return (lower_triangle(estimate.matrix()) - g).norm() / denom;
}

double cosine_similarity(const GgmNetwork& estimate, const GgmNetwork& truth) {
  check_pair(estimate, truth);
  const Vector g = lower_triangle(truth.matrix());
  const Vector h = lower_triangle(estimate.matrix());
  const double denom = g.norm() * h.norm();
  if (denom == 0.0) fail(ErrorCode::degenerate, "cosine similarity needs nonzero networks");
  return std::clamp(g.dot(h) / denom, -1.0, 1.0);
}

double quantile(std::vector<double> values, double prob) {
  require(!values.empty(), "quantile of an empty sample");
  require(prob >= 0.0 && prob <= 1.0, "quantile probability must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = prob * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Summary summarize(const std::vector<double>& values) {
  std::vector<double> finite;
  std::copy_if(values.begin(), values.end(), std::back_inserter(finite), [](double v) { return std::isfinite(v); });
  if (finite.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan, nan};
  }
  return {quantile(finite, 0.5), quantile(finite, 0.025), quantile(finite, 0.975)};
}

MetricRecord evaluate_network(const GgmNetwork& estimate, const GgmNetwork& truth) {
  MetricRecord r;
  r.matrix_rv = or_nan([&] { return matrix_rv(estimate.matrix(), truth.matrix()); });
  r.relative_euclidean = or_nan([&] { return relative_euclidean(estimate, truth); });
  r.cosine = or_nan([&] { return cosine_similarity(estimate, truth); });
  return r;
}

}  // namespace msfax
