#include <doctest.h>

#include "msfax/experiment.hpp"
#include "msfax/factors.hpp"
#include "msfax/simulate.hpp"
#include "support.hpp"

using namespace msfax;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST_CASE("scree test examples") {
  CHECK(cng_scree(vec({10, 9, 8, 1, 0.9, 0.8, 0.7})) == 3);
  CHECK(cng_scree(vec({10, 9, 8, 1, 0.9, 0.8, 0.7})) == oracle::cng_brute_force(vec({10, 9, 8, 1, 0.9, 0.8, 0.7})));

  const Vector linear = vec({7, 6, 5, 4, 3, 2, 1});
  for (double d : cng_slope_differences(linear)) CHECK(d == doctest::Approx(0.0));
  CHECK(cng_scree(linear) == 2);  // smallest candidate

  CHECK_THROWS_AS(cng_scree(vec({5, 4, 3, 2, 1})), Error);
}

TEST_CASE("scree test agrees with brute force and is scale invariant") {
  std::mt19937_64 rng(808);
  std::uniform_int_distribution<int> pick_m(6, 30);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (int rep = 0; rep < 300; ++rep) {
    const int m = pick_m(rng);
    Vector ev = oracle::random_uniform(m, 0.0, 10.0, rng);
    std::sort(ev.data(), ev.data() + m, std::greater<>());
    const int count = cng_scree(ev);
    CHECK(count == oracle::cng_brute_force(ev));
    CHECK(count >= 2);
    CHECK(count <= m - 4);
    const double c = scale(rng);
    CHECK(cng_scree(Vector(c * ev)) == count);
    CHECK(cng_slope_differences(ev).size() == static_cast<std::size_t>(m - 5));
  }
}

TEST_CASE("correlation eigenvalues are scale free and sum to p") {
  std::mt19937_64 rng(809);
  Matrix x = oracle::random_matrix(300, 7, rng);
  x = x.rowwise() - x.colwise().mean();
  const Vector ev = correlation_eigenvalues(x);
  CHECK(ev.sum() == doctest::Approx(7.0));
  for (Eigen::Index i = 1; i < ev.size(); ++i) CHECK(ev(i) <= ev(i - 1));
  Matrix scaled = x;
  scaled.col(2) *= 50.0;
  CHECK((correlation_eigenvalues(scaled) - ev).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("factor count estimate on a baseline replicate") {
  const SimulationSetting setting = builtin_setting("setting2");
  const SimulatedData sim = generate_dataset(setting);
  testing::WarningCapture warnings;
  const FactorCountEstimate est = estimate_factor_counts(sim.data);
  REQUIRE(est.total_per_study.size() == 2);
  CHECK(est.k >= 1);
  CHECK(est.k <= *std::min_element(est.total_per_study.begin(), est.total_per_study.end()));
  for (std::size_t s = 0; s < 2; ++s) {
    CHECK(est.j[s] >= 1);
    if (est.total_per_study[s] - est.k >= 1) CHECK(est.total_per_study[s] == est.k + est.j[s]);
  }
  CHECK(validate_identifiability(setting.p, est.k, est.j).feasible);
  double total = 0.0;
  for (double f : est.shared_eigen_fractions) {
    CHECK(f >= 0.0);
    total += f;
  }
  CHECK(total <= 1.0 + 1e-9);
  CHECK(warnings.messages.size() == est.warnings.size());
}

TEST_CASE("one strong shared direction gives a single shared factor") {
  // rank-one shared covariance with strong signal
  SimulationSetting s;
  s.name = "rank-one";
  s.n = {3000, 3000};
  s.p = 12;
  s.k = 1;
  s.j = {1, 1};
  s.seed = 5;
  Rng rng = make_rng(s.seed);
  MsfaxModel truth = generate_model(s, rng);
  MsfaParameters params = truth.parameters();
  params.phi = LoadingsMatrix(Matrix(4.0 * Matrix::Ones(12, 1)));
  MsfaxModel strong(params, truth.gamma(), truth.etas());
  const MultiStudyDataset data = sample_from_model(strong, s.n, rng).centered();
  testing::WarningCapture warnings;
  const FactorCountEstimate est = estimate_factor_counts(data);
  CHECK(est.k == 1);
}

TEST_CASE("estimation requires centered data") {
  std::mt19937_64 rng(810);
  Matrix x = oracle::random_matrix(50, 8, rng).array() + 3.0;
  CHECK_THROWS_AS(estimate_factor_counts(MultiStudyDataset({x, x})), Error);
}
