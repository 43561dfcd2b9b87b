#include "msfax/simulate.hpp"

#include <algorithm>
#include <cctype>

namespace msfax {

const char* to_string(NoiseRegime regime) {
  switch (regime) {
    case NoiseRegime::equal: return "equal";
    case NoiseRegime::gamma_dominant: return "gamma_dominant";
    case NoiseRegime::eta_dominant: return "eta_dominant";
  }
  return "equal";
}

NoiseRegime parse_noise_regime(const std::string& text) {
  if (text == "equal") return NoiseRegime::equal;
  if (text == "gamma_dominant") return NoiseRegime::gamma_dominant;
  if (text == "eta_dominant") return NoiseRegime::eta_dominant;
  fail(ErrorCode::parse, "unknown noise regime '" + text + "'");
}

void SimulationSetting::validate() const {
  require(!n.empty(), "setting needs at least one study");
  require(j.size() == n.size(), "setting needs one j_s per study");
  for (int ns : n) require(ns >= 2, "every study needs at least 2 observations");
  for (int js : j) require(js >= 1, "every j_s must be positive");
  require(p >= 1 && k >= 1, "p and k must be positive");
  if (!validate_identifiability(p, k, j).feasible) {
    fail(ErrorCode::infeasible_configuration, "setting '" + name + "' violates the identifiability conditions");
  }
}

namespace {

constexpr double kZeroProbability = 0.6;
constexpr double kSmallLoadingLow = 0.01;
constexpr double kSmallLoadingHigh = 0.05;
constexpr int kMaxRankRedraws = 1000;

SimulationSetting make(std::string name, std::vector<int> n, int p, int k, std::vector<int> j,
                       NoiseRegime noise = NoiseRegime::equal, bool exact_zeros = true) {
  SimulationSetting s;
  s.name = std::move(name);
  s.n = std::move(n);
  s.p = p;
  s.k = k;
  s.j = std::move(j);
  s.noise = noise;
  s.exact_zeros = exact_zeros;
  return s;
}

const std::vector<std::pair<std::string, int>>& aliases() {
  static const std::vector<std::pair<std::string, int>> a{
      {"baseline", 1},       {"fewer-predictors", 2}, {"more-studies", 3},  {"more-factors", 4},
      {"small-n", 5},        {"unequal-n", 6},        {"gamma-dominant", 7}, {"eta-dominant", 8},
      {"not-true-zeros", 9}, {"mimic-hapo", 10}};
  return a;
}

struct Supports {
  double gamma_lo, gamma_hi, eta_lo, eta_hi;
};

Supports supports(NoiseRegime regime) {
  switch (regime) {
    case NoiseRegime::equal: return {0.1, 0.5, 0.1, 0.5};
    case NoiseRegime::gamma_dominant: return {0.5, 1.0, 0.05, 0.25};
    case NoiseRegime::eta_dominant: return {0.05, 0.25, 0.5, 1.0};
  }
  return {0.1, 0.5, 0.1, 0.5};
}

Vector uniform_vector(Eigen::Index size, double lo, double hi, Rng& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(size);
  for (Eigen::Index i = 0; i < size; ++i) v(i) = u(rng);
  return v;
}

// Replace the free zero entries by +-u, u ~ U(0.01, 0.05).
void fill_small_loadings(Matrix& values, Rng& rng) {
  std::uniform_real_distribution<double> mag(kSmallLoadingLow, kSmallLoadingHigh);
  std::bernoulli_distribution sign(0.5);
  for (Eigen::Index c = 0; c < values.cols(); ++c) {
    for (Eigen::Index r = c; r < values.rows(); ++r) {
      if (values(r, c) == 0.0) values(r, c) = (sign(rng) ? 1.0 : -1.0) * mag(rng);
    }
  }
}

}  // namespace

const std::vector<SimulationSetting>& builtin_settings() {
  static const std::vector<SimulationSetting> settings{
      make("setting1", {1600, 1600}, 60, 2, {2, 2}),
      make("setting2", {1600, 1600}, 12, 2, {2, 2}),
      make("setting3", {1600, 1600, 1600, 1600}, 60, 2, {2, 2, 2, 2}),
      make("setting4", {1600, 1600}, 60, 4, {3, 5}),
      make("setting5", {250, 250}, 60, 2, {2, 2}),
      make("setting6", {1600, 250}, 60, 2, {2, 2}),
      make("setting7", {1600, 1600}, 60, 2, {2, 2}, NoiseRegime::gamma_dominant),
      make("setting8", {1600, 1600}, 60, 2, {2, 2}, NoiseRegime::eta_dominant),
      make("setting9", {1600, 1600}, 60, 2, {2, 2}, NoiseRegime::equal, false),
      make("setting10", {2887, 576}, 60, 2, {2, 2}, NoiseRegime::equal, false),
  };
  return settings;
}

SimulationSetting builtin_setting(const std::string& raw) {
  std::string name = raw;
  std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
  std::replace(name.begin(), name.end(), '_', '-');
  int index = 0;
  if (name.rfind("setting", 0) == 0) name = name.substr(7);
  if (!name.empty() && std::all_of(name.begin(), name.end(), [](unsigned char c) { return std::isdigit(c); })) {
    index = std::stoi(name);
  } else {
    for (const auto& [alias, idx] : aliases()) {
      if (alias == name) index = idx;
    }
  }
  if (index < 1 || index > static_cast<int>(builtin_settings().size())) {
    fail(ErrorCode::invalid_argument, "unknown simulation setting '" + raw + "'");
  }
  return builtin_settings()[static_cast<std::size_t>(index - 1)];
}

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

LoadingsMatrix generate_loadings(int p, int m, Rng& rng) {
  require(p >= 1 && m >= 1 && m <= p, "generate_loadings needs 1 <= m <= p");
  std::bernoulli_distribution is_zero(kZeroProbability);
  std::bernoulli_distribution positive(0.5);
  Matrix values = Matrix::Zero(p, m);
  for (int c = 0; c < m; ++c) {
    for (int r = c; r < p; ++r) {
      const bool zero = r != c && is_zero(rng);
      const bool pos = positive(rng);
      if (!zero) values(r, c) = pos ? 1.0 : -1.0;
    }
  }
  return LoadingsMatrix(std::move(values));
}

MsfaxModel generate_model(const SimulationSetting& setting, Rng& rng) {
  setting.validate();
  const std::size_t S = setting.num_studies();
  MsfaParameters params;
  for (int attempt = 0;; ++attempt) {
    if (attempt == kMaxRankRedraws) {
      fail(ErrorCode::degenerate, "could not draw loadings of full column rank");
    }
    params.phi = generate_loadings(setting.p, setting.k, rng);
    params.lambdas.clear();
    for (std::size_t s = 0; s < S; ++s) params.lambdas.push_back(generate_loadings(setting.p, setting.j[s], rng));
    if (has_full_column_rank(stacked_loadings(params))) break;
  }
  if (!setting.exact_zeros) {
    Matrix phi = params.phi.values();
    fill_small_loadings(phi, rng);
    params.phi = LoadingsMatrix(std::move(phi));
    for (auto& l : params.lambdas) {
      Matrix v = l.values();
      fill_small_loadings(v, rng);
      l = LoadingsMatrix(std::move(v));
    }
  }
  const Supports sup = supports(setting.noise);
  Vector gamma = uniform_vector(setting.p, sup.gamma_lo, sup.gamma_hi, rng);
  std::vector<Vector> etas;
  for (std::size_t s = 0; s < S; ++s) {
    etas.push_back(uniform_vector(setting.p, sup.eta_lo, sup.eta_hi, rng));
    params.psi.push_back(gamma + etas.back());
  }
  return MsfaxModel(std::move(params), std::move(gamma), std::move(etas));
}

MultiStudyDataset sample_from_model(const MsfaxModel& model, const std::vector<int>& n, Rng& rng) {
  require(n.size() == model.num_studies(), "need one sample size per study");
  std::normal_distribution<double> normal(0.0, 1.0);
  auto gaussian = [&](Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
      for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = normal(rng);
    }
    return m;
  };
  const Eigen::Index p = model.num_predictors();
  std::vector<Matrix> studies;
  for (std::size_t s = 0; s < model.num_studies(); ++s) {
    require(n[s] >= 2, "every study needs at least 2 observations");
    const Matrix f = gaussian(n[s], model.shared_factors());
    const Matrix l = gaussian(n[s], model.lambdas()[s].cols());
    const Vector sd = (model.gamma() + model.etas()[s]).cwiseSqrt();
    const Matrix e = gaussian(n[s], p) * sd.asDiagonal();
    studies.emplace_back(f * model.phi().values().transpose() + l * model.lambdas()[s].values().transpose() + e);
  }
  return MultiStudyDataset(std::move(studies));
}

SimulatedData generate_dataset(const SimulationSetting& setting) {
  Rng rng = make_rng(setting.seed);
  MsfaxModel truth = generate_model(setting, rng);
  MultiStudyDataset raw = sample_from_model(truth, setting.n, rng);
  NetworkSet nets = networks_from_model(truth);
  return {raw.centered(), std::move(truth), std::move(nets)};
}

}  // namespace msfax
