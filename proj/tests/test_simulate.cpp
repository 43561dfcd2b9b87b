#include <doctest.h>

#include "msfax/simulate.hpp"
#include "support.hpp"

using namespace msfax;

TEST_CASE("built-in settings") {
  const auto& all = builtin_settings();
  REQUIRE(all.size() == 10);
  CHECK(all[0].p == 60);
  CHECK(all[0].n == std::vector<int>{1600, 1600});
  CHECK(all[1].p == 12);
  CHECK(all[2].num_studies() == 4);
  CHECK(all[3].k == 4);
  CHECK(all[3].j == std::vector<int>{3, 5});
  CHECK(all[4].n == std::vector<int>{250, 250});
  CHECK(all[5].n == std::vector<int>{1600, 250});
  CHECK(all[6].noise == NoiseRegime::gamma_dominant);
  CHECK(all[7].noise == NoiseRegime::eta_dominant);
  CHECK_FALSE(all[8].exact_zeros);
  CHECK(all[9].n == std::vector<int>{2887, 576});
  for (const auto& s : all) CHECK_NOTHROW(s.validate());

  CHECK(builtin_setting("baseline").name == "setting1");
  CHECK(builtin_setting("3").name == "setting3");
  CHECK(builtin_setting("Setting10").name == "setting10");
  CHECK(builtin_setting("mimic_hapo").name == "setting10");
  CHECK_THROWS_AS(builtin_setting("setting11"), Error);
  CHECK_THROWS_AS(builtin_setting("nope"), Error);

  CHECK(parse_noise_regime(to_string(NoiseRegime::eta_dominant)) == NoiseRegime::eta_dominant);
  CHECK_THROWS_AS(parse_noise_regime("loud"), Error);
}

TEST_CASE("generated loadings") {
  Rng rng = make_rng(3);
  const LoadingsMatrix one = generate_loadings(1, 1, rng);
  CHECK(std::abs(one.values()(0, 0)) == 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    const LoadingsMatrix l = generate_loadings(8, 3, rng);
    for (Eigen::Index c = 0; c < 3; ++c) {
      CHECK(std::abs(l.values()(c, c)) == 1.0);
      for (Eigen::Index r = 0; r < 8; ++r) {
        const double v = l.values()(r, c);
        CHECK((v == 0.0 || v == 1.0 || v == -1.0));
        if (r < c) CHECK(v == 0.0);
      }
    }
  }
  CHECK_THROWS_AS(generate_loadings(2, 3, rng), Error);
}

TEST_CASE("noise supports follow the regime") {
  for (const char* name : {"setting1", "setting7", "setting8"}) {
    SimulationSetting s = builtin_setting(name);
    Rng rng = make_rng(11);
    const MsfaxModel m = generate_model(s, rng);
    const double g_lo = m.gamma().minCoeff(), g_hi = m.gamma().maxCoeff();
    const double e_lo = std::min(m.etas()[0].minCoeff(), m.etas()[1].minCoeff());
    const double e_hi = std::max(m.etas()[0].maxCoeff(), m.etas()[1].maxCoeff());
    if (s.noise == NoiseRegime::equal) {
      CHECK(g_lo >= 0.1);
      CHECK(g_hi <= 0.5);
      CHECK(e_lo >= 0.1);
      CHECK(e_hi <= 0.5);
    } else if (s.noise == NoiseRegime::gamma_dominant) {
      CHECK(g_lo >= 0.5);
      CHECK(e_hi <= 0.25);
    } else {
      CHECK(e_lo >= 0.5);
      CHECK(g_hi <= 0.25);
    }
    CHECK(has_full_column_rank(stacked_loadings(m.parameters())));
  }
}

TEST_CASE("settings without exact zeros have small nonzero loadings") {
  SimulationSetting s = builtin_setting("setting9");
  Rng rng = make_rng(12);
  const MsfaxModel m = generate_model(s, rng);
  const Matrix& phi = m.phi().values();
  int small = 0;
  for (Eigen::Index c = 0; c < phi.cols(); ++c) {
    for (Eigen::Index r = c; r < phi.rows(); ++r) {
      const double a = std::abs(phi(r, c));
      CHECK(a > 0.0);
      if (a < 1.0) {
        CHECK(a >= 0.01);
        CHECK(a <= 0.05);
        ++small;
      }
    }
  }
  CHECK(small > 0);
}

TEST_CASE("datasets are centered, shaped and deterministic") {
  SimulationSetting s = builtin_setting("setting2");
  const SimulatedData a = generate_dataset(s);
  const SimulatedData b = generate_dataset(s);
  CHECK(a.data.is_centered());
  REQUIRE(a.data.num_studies() == 2);
  CHECK(a.data.study(0).rows() == 1600);
  CHECK(a.data.study(0).cols() == 12);
  for (std::size_t st = 0; st < 2; ++st) CHECK(a.data.study(st) == b.data.study(st));
  CHECK(a.truth.phi().values() == b.truth.phi().values());
  CHECK(a.true_networks.shared.matrix() == b.true_networks.shared.matrix());

  s.seed += 1;
  const SimulatedData c = generate_dataset(s);
  CHECK(c.data.study(0) != a.data.study(0));
}

TEST_CASE("independent RNG streams differ") {
  Rng a = make_rng(1, 0), b = make_rng(1, 1), c = make_rng(1, 0);
  const auto x = a(), y = b(), z = c();
  CHECK(x != y);
  CHECK(x == z);
}

TEST_CASE("sample covariance approaches the model covariance") {
  // a reduced version of the large-sample fidelity check
  SimulationSetting s = builtin_setting("setting2");
  Rng rng = make_rng(99);
  const MsfaxModel m = generate_model(s, rng);
  const MultiStudyDataset data = sample_from_model(m, {40000, 40000}, rng);
  for (std::size_t st = 0; st < 2; ++st) {
    const Matrix x = data.study(st);
    const Matrix cov = x.transpose() * x / static_cast<double>(x.rows());
    const Matrix truth = covariance_from_model(m, st);
    CHECK((cov - truth).norm() / truth.norm() < 0.03);
  }
  CHECK_THROWS_AS(sample_from_model(m, {10}, rng), Error);
}

TEST_CASE("invalid settings are rejected") {
  SimulationSetting s = builtin_setting("setting1");
  s.j = {2};
  CHECK_THROWS_AS(s.validate(), Error);
  s = builtin_setting("setting1");
  s.p = 5;
  try {
    s.validate();
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::infeasible_configuration);
  }
  s = builtin_setting("setting1");
  s.n = {1, 1600};
  CHECK_THROWS_AS(s.validate(), Error);
}
