#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "msfax/core.hpp"
#include "msfax/decompose.hpp"

namespace msfax {

enum class NoiseRegime { equal, gamma_dominant, eta_dominant };

const char* to_string(NoiseRegime regime);
NoiseRegime parse_noise_regime(const std::string& text);

struct SimulationSetting {
  std::string name;
  std::vector<int> n;  // sample size per study
  int p = 0;
  int k = 0;
  std::vector<int> j;
  NoiseRegime noise = NoiseRegime::equal;
  bool exact_zeros = true;
  std::uint64_t seed = 1;

  std::size_t num_studies() const { return n.size(); }
  void validate() const;
};

/// The ten built-in designs, in order (setting1 .. setting10).
const std::vector<SimulationSetting>& builtin_settings();
/// Look up a built-in by "1".."10", "setting<N>" or its descriptive alias
/// (baseline, fewer-predictors, more-studies, more-factors, small-n,
/// unequal-n, gamma-dominant, eta-dominant, not-true-zeros, mimic-hapo).
SimulationSetting builtin_setting(const std::string& name);

using Rng = std::mt19937_64;

/// Entries in {0, -1, 1} with the lower-triangular constraint; every
/// diagonal entry of the top block is +-1, other free entries are 0 with
/// probability 0.6.
LoadingsMatrix generate_loadings(int p, int m, Rng& rng);

/// True model for a setting. Loadings are redrawn until [Phi, Lambda_1..S]
/// has full column rank.
MsfaxModel generate_model(const SimulationSetting& setting, Rng& rng);

struct SimulatedData {
  MultiStudyDataset data;  // column-centered
  MsfaxModel truth;
  NetworkSet true_networks;
};

/// Draws x = Phi f + Lambda_s l + e with f ~ N(0, I_k), l ~ N(0, I_js),
/// e ~ N(0, Gamma + H_s). Deterministic given setting.seed.
SimulatedData generate_dataset(const SimulationSetting& setting);

/// Sample a dataset from a fixed model (no centering applied).
MultiStudyDataset sample_from_model(const MsfaxModel& model, const std::vector<int>& n, Rng& rng);

/// Generator seeded from (seed, stream) for independent replicate streams.
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

}  // namespace msfax
