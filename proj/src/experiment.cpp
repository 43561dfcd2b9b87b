#include "msfax/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <thread>

#include "msfax/decompose.hpp"
#include "msfax/log.hpp"

namespace msfax {

std::string setting_label(const SimulationSetting& setting) {
  const std::string& name = setting.name;
  if (name.rfind("setting", 0) == 0 && name.size() > 7 &&
      std::all_of(name.begin() + 7, name.end(), [](unsigned char c) { return std::isdigit(c); })) {
    return "Setting " + name.substr(7);
  }
  return name;
}

std::string target_label(std::size_t study, bool shared) {
  return shared ? "Shared" : "Study " + std::to_string(study + 1);
}

std::uint64_t replicate_seed(std::uint64_t base, int rep) {
  // splitmix64 step on base + rep
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(rep + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double worst_increase_violation(const std::vector<double>& trace) {
  double worst = 0.0;
  for (std::size_t t = 1; t < trace.size(); ++t) worst = std::max(worst, trace[t - 1] - trace[t]);
  return worst;
}

namespace {

void add_records(ReplicateResult& out, const std::string& method, const std::string& setting,
                 const NetworkSet& estimate, const NetworkSet& truth) {
  auto push = [&](const GgmNetwork& est, const GgmNetwork& tru, const std::string& target) {
    MetricRecord r = evaluate_network(est, tru);
    r.method = method;
    r.setting = setting;
    r.target = target;
    r.replicate = out.replicate;
    out.records.push_back(std::move(r));
  };
  push(estimate.shared, truth.shared, target_label(0, true));
  for (std::size_t s = 0; s < truth.specific.size(); ++s) {
    push(estimate.specific[s], truth.specific[s], target_label(s, false));
  }
}

void fit_and_record(ReplicateResult& out, const std::string& method, const std::string& label,
                    const SimulatedData& sim, int k, const std::vector<int>& j, const EcmOptions& ecm) {
  const EcmFit fit = fit_msfa(sim.data, k, j, ecm);
  out.worst_loglik_drop = std::max(out.worst_loglik_drop, worst_increase_violation(fit.loglik_trace));
  out.all_converged = out.all_converged && fit.converged;
  add_records(out, method, label, networks_from_fit(fit).networks, sim.true_networks);
}

}  // namespace

ReplicateResult run_replicate(const SimulationSetting& setting, int rep, const ExperimentOptions& opts) {
  ReplicateResult out;
  out.replicate = rep;
  out.seed = replicate_seed(setting.seed, rep);
  SimulationSetting local = setting;
  local.seed = out.seed;
  const SimulatedData sim = generate_dataset(local);
  const std::string label = setting_label(setting);
  EcmOptions ecm = opts.ecm;
  ecm.seed = out.seed;

  auto guarded = [&](const std::string& method, auto&& body) {
    try {
      body();
    } catch (const Error& e) {
      out.errors.push_back(method + ": " + e.what());
      warn("replicate " + std::to_string(rep) + ", " + method + ": " + e.what());
    }
  };

  if (opts.glasso) {
    guarded(kMethodGlasso, [&] { add_records(out, kMethodGlasso, label, benchmark_networks(sim.data, opts.glasso_opts), sim.true_networks); });
  }
  if (opts.estimated_factors) {
    guarded(kMethodEstimated, [&] {
      out.estimate = estimate_factor_counts(sim.data, ecm);
      out.has_estimate = true;
      fit_and_record(out, kMethodEstimated, label, sim, out.estimate.k, out.estimate.j, ecm);
    });
  }
  if (opts.true_factors) {
    guarded(kMethodTrue, [&] { fit_and_record(out, kMethodTrue, label, sim, setting.k, setting.j, ecm); });
  }
  return out;
}

ExperimentResult run_experiment(const SimulationSetting& setting, int reps, const ExperimentOptions& opts) {
  require(reps >= 1, "reps must be positive");
  require(opts.jobs >= 1, "jobs must be positive");
  setting.validate();
  ExperimentResult result;
  result.replicates.resize(static_cast<std::size_t>(reps));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int r = next++; r < reps; r = next++) {
      result.replicates[static_cast<std::size_t>(r)] = run_replicate(setting, r + 1, opts);
    }
  };
  const int n_threads = std::min(opts.jobs, reps);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return result;
}

std::vector<MetricRecord> ExperimentResult::records() const {
  std::vector<MetricRecord> all;
  for (const auto& r : replicates) all.insert(all.end(), r.records.begin(), r.records.end());
  return all;
}

double ExperimentResult::worst_loglik_drop() const {
  double worst = 0.0;
  for (const auto& r : replicates) worst = std::max(worst, r.worst_loglik_drop);
  return worst;
}

}  // namespace msfax
