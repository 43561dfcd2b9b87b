#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "msfax/benchmark.hpp"
#include "msfax/ecm.hpp"
#include "msfax/factors.hpp"
#include "msfax/metrics.hpp"
#include "msfax/simulate.hpp"

namespace msfax {

inline constexpr const char* kMethodGlasso = "glasso";
inline constexpr const char* kMethodEstimated = "MSFA-X: Est. Fac.";
inline constexpr const char* kMethodTrue = "MSFA-X: True Fac.";

struct ExperimentOptions {
  bool true_factors = true;
  bool estimated_factors = true;
  bool glasso = true;
  EcmOptions ecm;
  GlassoOptions glasso_opts;
  int jobs = 1;
};

struct ReplicateResult {
  int replicate = 0;
  std::uint64_t seed = 0;
  std::vector<MetricRecord> records;
  // Largest decrease of the log-likelihood between consecutive iterations
  // over every fit of the replicate (<= 0 when all traces are monotone).
  double worst_loglik_drop = 0.0;
  bool all_converged = true;
  bool has_estimate = false;
  FactorCountEstimate estimate;
  std::vector<std::string> errors;
};

struct ExperimentResult {
  std::vector<ReplicateResult> replicates;

  std::vector<MetricRecord> records() const;
  double worst_loglik_drop() const;
};

/// "Setting 3" for built-in names, the raw name otherwise.
std::string setting_label(const SimulationSetting& setting);
/// "Shared" or "Study <s>" (1-based).
std::string target_label(std::size_t study, bool shared);

/// Seed of replicate `rep` derived from the setting seed.
std::uint64_t replicate_seed(std::uint64_t base, int rep);

double worst_increase_violation(const std::vector<double>& trace);

ReplicateResult run_replicate(const SimulationSetting& setting, int rep, const ExperimentOptions& opts);

/// Replicates 1..reps, run on opts.jobs worker threads. The result does not
/// depend on the number of workers.
ExperimentResult run_experiment(const SimulationSetting& setting, int reps, const ExperimentOptions& opts);

}  // namespace msfax
