#include <doctest.h>

#include <cmath>
#include <numbers>

#include "msfax/decompose.hpp"
#include "msfax/ecm.hpp"
#include "msfax/experiment.hpp"
#include "msfax/simulate.hpp"
#include "support.hpp"

using namespace msfax;

namespace {

MsfaParameters one_factor_identity(int p, int S) {
  MsfaParameters params;
  params.phi = LoadingsMatrix(Matrix::Zero(p, 1));
  for (int s = 0; s < S; ++s) {
    params.lambdas.emplace_back(Matrix::Zero(p, 1));
    params.psi.push_back(Vector::Ones(p));
  }
  return params;
}

MultiStudyDataset small_dataset(std::uint64_t seed, const std::vector<int>& n, int p, int k, const std::vector<int>& j) {
  SimulationSetting s;
  s.name = "small";
  s.n = n;
  s.p = p;
  s.k = k;
  s.j = j;
  s.seed = seed;
  return generate_dataset(s).data;
}

}  // namespace

TEST_CASE("observed log-likelihood examples") {
  // a single observation needs a second row to be a valid dataset, so use
  // two rows and halve the result
  const MultiStudyDataset zero({Matrix::Zero(2, 1)});
  CHECK(observed_loglik(one_factor_identity(1, 1), zero) / 2.0 == doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)));
  CHECK(observed_loglik(one_factor_identity(1, 1), zero) / 2.0 == doctest::Approx(-0.9189).epsilon(1e-4));

  const MultiStudyDataset ones({Matrix::Ones(2, 2)});
  CHECK(observed_loglik(one_factor_identity(2, 1), ones) / 2.0 == doctest::Approx(-std::log(2.0 * std::numbers::pi) - 1.0));
  CHECK(observed_loglik(one_factor_identity(2, 1), ones) / 2.0 == doctest::Approx(-2.8379).epsilon(1e-4));
}

TEST_CASE("observed log-likelihood matches an explicit density oracle") {
  std::mt19937_64 rng(505);
  for (int rep = 0; rep < 100; ++rep) {
    const MsfaParameters params = testing::random_parameters(4, 1, {1, 2}, rng);
    std::vector<Matrix> studies{oracle::random_matrix(10, 4, rng), oracle::random_matrix(6, 4, rng)};
    const MultiStudyDataset data(studies);
    double expected = 0.0;
    for (std::size_t s = 0; s < 2; ++s) {
      const Matrix sigma = params.covariance(s);
      for (Eigen::Index i = 0; i < studies[s].rows(); ++i) {
        expected += oracle::mvn_logpdf(studies[s].row(i).transpose(), sigma);
      }
    }
    CHECK(std::abs(observed_loglik(params, data) - expected) <= 1e-10 * std::max(1.0, std::abs(expected)));
  }
  const MsfaParameters params = testing::random_parameters(4, 1, {1}, rng);
  CHECK_THROWS_AS(observed_loglik(params, MultiStudyDataset({Matrix::Zero(3, 4), Matrix::Zero(3, 4)})), Error);
}

TEST_CASE("E-step moments match Gaussian conditioning") {
  std::mt19937_64 rng(606);
  std::uniform_int_distribution<int> pick_p(2, 6);
  int cases = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const int p = pick_p(rng);
    std::uniform_int_distribution<int> pick_k(1, p - 1);
    const int k = pick_k(rng);
    std::uniform_int_distribution<int> pick_j(1, p - k);
    const int js = pick_j(rng);
    const Matrix phi = oracle::lower_triangular(oracle::random_matrix(p, k, rng));
    const Matrix lambda = oracle::lower_triangular(oracle::random_matrix(p, js, rng));
    const Vector psi = oracle::random_uniform(p, 0.1, 1.5, rng);
    const Vector x = oracle::random_matrix(p, 1, rng, 2.0);
    Matrix omega(p, k + js);
    omega << phi, lambda;
    const oracle::Moments expected = oracle::gaussian_conditioning(omega, psi, x);
    const ConditionalMoments got = conditional_moments(phi, lambda, psi, x);
    CHECK((got.mean - expected.mean).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, expected.mean.cwiseAbs().maxCoeff()));
    CHECK((got.second_moment - expected.second).cwiseAbs().maxCoeff() <=
          1e-10 * std::max(1.0, expected.second.cwiseAbs().maxCoeff()));
    ++cases;
  }
  CHECK(cases >= 100);
  CHECK_THROWS_AS(conditional_moments(Matrix::Ones(3, 1), Matrix::Ones(2, 1), Vector::Ones(3), Vector::Ones(3)), Error);
}

TEST_CASE("sign canonicalization") {
  Matrix m(3, 2);
  m << 1.0, -3.0, -2.0, 1.0, 0.5, 2.0;
  canonicalize_signs(m);
  CHECK(m(1, 0) == 2.0);
  CHECK(m(0, 1) == 3.0);
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    Eigen::Index arg = 0;
    m.col(c).cwiseAbs().maxCoeff(&arg);
    CHECK(m(arg, c) > 0.0);
  }
}

TEST_CASE("option and input validation") {
  EcmOptions bad;
  bad.max_iter = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = {};
  bad.rel_tol = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = {};
  bad.n_starts = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = {};
  bad.ridge = -1.0;
  CHECK_THROWS_AS(bad.validate(), Error);

  const MultiStudyDataset data = small_dataset(1, {200, 200}, 8, 1, {1, 1});
  const std::vector<int> j11{1, 1};
  CHECK_THROWS_AS(fit_msfa(data, 1, std::vector<int>{1}), Error);
  CHECK_THROWS_AS(fit_msfa(data, 0, j11), Error);
  try {
    fit_msfa(data, 5, std::vector<int>{2, 2});
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::infeasible_configuration);
  }
  std::vector<Matrix> raw = data.studies();
  raw[0].array() += 1.0;
  CHECK_THROWS_AS(fit_msfa(MultiStudyDataset(raw), 1, j11), Error);
}

TEST_CASE("fits are monotone, constrained and deterministic") {
  const MultiStudyDataset data = small_dataset(7, {300, 250}, 10, 2, {1, 2});
  const std::vector<int> j{1, 2};
  EcmOptions opts;
  opts.seed = 42;
  const EcmFit a = fit_msfa(data, 2, j, opts);
  const EcmFit b = fit_msfa(data, 2, j, opts);

  CHECK(a.converged);
  CHECK(a.n_iter == static_cast<int>(a.loglik_trace.size()));
  CHECK(worst_increase_violation(a.loglik_trace) <= 1e-6);
  CHECK(a.loglik_trace == b.loglik_trace);
  CHECK(a.params.phi.values() == b.params.phi.values());
  for (std::size_t s = 0; s < 2; ++s) {
    CHECK(a.params.lambdas[s].values() == b.params.lambdas[s].values());
    CHECK(a.params.psi[s] == b.params.psi[s]);
    CHECK((a.params.psi[s].array() > 0.0).all());
  }

  for (Eigen::Index c = 0; c < a.params.phi.cols(); ++c) {
    for (Eigen::Index r = 0; r < c; ++r) CHECK(a.params.phi.values()(r, c) == 0.0);
    Eigen::Index arg = 0;
    a.params.phi.values().col(c).cwiseAbs().maxCoeff(&arg);
    CHECK(a.params.phi.values()(arg, c) > 0.0);
  }

  // the reported trace ends at the log-likelihood of the returned parameters
  CHECK(observed_loglik(a.params, data, opts.ridge) ==
        doctest::Approx(a.loglik_trace.back()).epsilon(1e-6));
}

TEST_CASE("non-convergence is reported, not thrown") {
  testing::WarningCapture warnings;
  const MultiStudyDataset data = small_dataset(8, {200, 200}, 8, 1, {1, 1});
  EcmOptions opts;
  opts.max_iter = 2;
  opts.n_starts = 1;
  const EcmFit fit = fit_msfa(data, 1, std::vector<int>{1, 1}, opts);
  CHECK_FALSE(fit.converged);
  CHECK(fit.n_iter == 2);
  CHECK_FALSE(warnings.messages.empty());
}

TEST_CASE("a single study reduces to ordinary factor analysis") {
  // one study with k = 1, j = [1] is a two-factor model; compare the implied
  // covariance with a textbook factor-analysis EM fit
  const MultiStudyDataset data = small_dataset(9, {2000}, 8, 1, {1});
  EcmOptions opts;
  opts.rel_tol = 1e-10;
  opts.max_iter = 20000;
  const EcmFit fit = fit_msfa(data, 1, std::vector<int>{1}, opts);
  const Matrix sample = data.sample_covariance(0);
  const oracle::FaFit fa = oracle::factor_analysis_em(sample, 2, 20000);
  const Matrix ours = fit.params.covariance(0);
  const double rel = (ours - fa.covariance()).norm() / fa.covariance().norm();
  CHECK(rel < 0.05);
  for (Eigen::Index q = 0; q < 8; ++q) {
    CHECK(fit.params.psi[0](q) == doctest::Approx(fa.psi(q)).epsilon(0.05));
  }
}

TEST_CASE("recovers the generating covariance on a large sample") {
  SimulationSetting s;
  s.name = "recovery";
  s.n = {4000, 4000};
  s.p = 10;
  s.k = 2;
  s.j = {1, 1};
  s.seed = 77;
  const SimulatedData sim = generate_dataset(s);
  const EcmFit fit = fit_msfa(sim.data, 2, s.j);
  for (std::size_t st = 0; st < 2; ++st) {
    const Matrix truth = covariance_from_model(sim.truth, st);
    CHECK((fit.params.covariance(st) - truth).norm() / truth.norm() < 0.05);
  }
}
