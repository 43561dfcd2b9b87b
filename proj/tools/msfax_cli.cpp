#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "msfax.h"

namespace fs = std::filesystem;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kUsage = 2, kNumerical = 3 };

struct Failure {
  int code;
  std::string message;
};

void check(msfax_status status, const std::string& context) {
  if (status == MSFAX_OK) return;
  throw Failure{kFailure, context + ": " + msfax_last_error()};
}

template <typename T, void (*Free)(T*)>
struct Handle {
  T* ptr = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(ptr); }
  T** out() { return &ptr; }
  T* get() const { return ptr; }
};

using Setting = Handle<msfax_setting, msfax_setting_free>;
using Dataset = Handle<msfax_dataset, msfax_dataset_free>;
using Model = Handle<msfax_model, msfax_model_free>;
using Fit = Handle<msfax_fit, msfax_fit_free>;
using Estimate = Handle<msfax_factor_estimate, msfax_factor_estimate_free>;
using Networks = Handle<msfax_networks, msfax_networks_free>;
using Experiment = Handle<msfax_experiment, msfax_experiment_free>;

// Nested JSON objects map onto subcommands: {"fit": {"k": 2, "j": [2, 2]}}.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}\n"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError("config", std::string("invalid JSON config: ") + e.what());
    }
    if (!doc.is_object()) throw CLI::ConversionError("config", "JSON config must be an object");
    std::vector<CLI::ConfigItem> items;
    walk(doc, {}, items);
    return items;
  }

 private:
  static std::string scalar(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void walk(const nlohmann::json& obj, const std::vector<std::string>& parents,
                   std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : obj.items()) {
      if (value.is_object()) {
        auto next = parents;
        next.push_back(key);
        walk(value, next, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
  }
};

std::string default_out_dir() {
  const char* env = std::getenv("MSFAX_OUT_DIR");
  return env && *env ? env : "msfax_out";
}

struct EcmFlags {
  int max_iter = 0;
  double rel_tol = 0.0;
  int starts = 0;
  std::uint64_t seed = 1;
  double ridge = -1.0;

  void add(CLI::App* app) {
    msfax_ecm_options d;
    msfax_ecm_options_default(&d);
    max_iter = d.max_iter;
    rel_tol = d.rel_tol;
    starts = d.n_starts;
    seed = d.seed;
    ridge = d.ridge;
    app->add_option("--max-iter", max_iter, "ECM iteration limit")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--rel-tol", rel_tol, "relative log-likelihood stopping tolerance")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app->add_option("--starts", starts, "number of ECM starts")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--seed", seed, "seed for restarts / simulation")->capture_default_str();
    app->add_option("--ridge", ridge, "diagonal ridge for factorized matrices")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
  }

  msfax_ecm_options options() const {
    msfax_ecm_options o;
    msfax_ecm_options_default(&o);
    o.max_iter = max_iter;
    o.rel_tol = rel_tol;
    o.n_starts = starts;
    o.seed = seed;
    o.ridge = ridge;
    return o;
  }
};

void load_setting(const std::string& name_or_path, Setting& out) {
  if (fs::is_regular_file(name_or_path)) {
    check(msfax_setting_load(name_or_path.c_str(), out.out()), "loading setting '" + name_or_path + "'");
  } else {
    check(msfax_setting_builtin(name_or_path.c_str(), out.out()), "setting");
  }
}

void load_data(const std::string& manifest, Dataset& data) {
  check(msfax_dataset_load(manifest.c_str(), data.out()), "loading dataset");
  if (!msfax_dataset_is_centered(data.get())) check(msfax_dataset_center(data.get()), "centering dataset");
}

std::vector<std::string> split_list(const std::vector<std::string>& raw) {
  std::vector<std::string> out;
  for (const auto& item : raw) {
    std::stringstream ss(item);
    std::string part;
    while (std::getline(ss, part, ',')) {
      if (!part.empty()) out.push_back(part);
    }
  }
  return out;
}

// subcommands

struct SimulateCmd {
  std::string setting;
  int reps = 1;
  std::optional<std::uint64_t> seed;
  std::string out_dir = default_out_dir();

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("simulate", "draw replicate datasets from a simulation setting");
    sub->add_option("--setting", setting, "built-in name (1..10, baseline, ...) or setting JSON file")->required();
    sub->add_option("--reps", reps, "number of replicate datasets")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "base seed (overrides the setting)");
    sub->add_option("--out-dir", out_dir, "output directory (default $MSFAX_OUT_DIR)")->capture_default_str();
    sub->callback([this] { run(); });
  }

  void run() {
    Setting s;
    load_setting(setting, s);
    if (seed) check(msfax_setting_set_seed(s.get(), *seed), "seed");
    check(msfax_simulate_replicates(s.get(), reps, out_dir.c_str()), "simulate");
    check(msfax_setting_save(s.get(), (fs::path(out_dir) / "setting.json").c_str()), "writing setting");
    std::cout << "wrote " << reps << " replicate(s) of " << msfax_setting_name(s.get()) << " to " << out_dir << "\n";
  }
};

struct FitCmd {
  std::string data;
  int k = 0;
  std::vector<int> j;
  bool auto_factors = false;
  bool strict = false;
  std::string out = default_out_dir();
  EcmFlags ecm;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("fit", "fit an MSFA-X model and write its networks");
    sub->add_option("--data", data, "dataset manifest JSON")->required()->check(CLI::ExistingFile);
    auto* k_opt = sub->add_option("--k", k, "number of shared factors")->check(CLI::PositiveNumber);
    auto* j_opt = sub->add_option("--j", j, "study-specific factor counts, one per study")->delimiter(',');
    auto* a_opt = sub->add_flag("--auto-factors", auto_factors, "estimate k and j_s by the two-step scree procedure");
    k_opt->excludes(a_opt)->needs(j_opt);
    j_opt->excludes(a_opt)->needs(k_opt);
    sub->add_flag("--strict", strict, "exit with code 3 when the ECM does not converge");
    sub->add_option("--out", out, "output directory (default $MSFAX_OUT_DIR)")->capture_default_str();
    ecm.add(sub);
    sub->callback([this, sub] {
      if (!auto_factors && sub->count("--k") == 0) throw CLI::RequiredError("--k/--j or --auto-factors");
      run();
    });
  }

  void run() {
    Dataset d;
    load_data(data, d);
    const msfax_ecm_options opts = ecm.options();
    const fs::path dir(out);
    if (auto_factors) {
      Estimate est;
      check(msfax_estimate_factors(d.get(), &opts, est.out()), "factor estimation");
      k = msfax_factor_estimate_k(est.get());
      j.clear();
      for (size_t s = 0; s < msfax_factor_estimate_num_studies(est.get()); ++s) {
        j.push_back(msfax_factor_estimate_j(est.get(), s));
      }
      check(msfax_factor_estimate_write(est.get(), (dir / "factors.json").c_str()), "writing factors.json");
    }
    Fit fit;
    check(msfax_fit_run(d.get(), k, j.data(), j.size(), &opts, fit.out()), "fit");
    Model model;
    check(msfax_fit_model(fit.get(), model.out()), "noise split");
    check(msfax_model_save(model.get(), d.get(), (dir / "model.json").c_str()), "writing model");
    check(msfax_fit_write_trace(fit.get(), (dir / "loglik.csv").c_str()), "writing trace");
    Networks nets;
    check(msfax_networks_from_model(model.get(), nets.out()), "networks");
    check(msfax_networks_write(nets.get(), out.c_str(), "", nullptr), "writing networks");
    const bool converged = msfax_fit_converged(fit.get()) != 0;
    std::cout << "k=" << k << " j=";
    for (std::size_t s = 0; s < j.size(); ++s) std::cout << (s ? "," : "") << j[s];
    std::cout << " iterations=" << msfax_fit_iterations(fit.get()) << " converged=" << (converged ? "yes" : "no")
              << "\n";
    if (!converged && strict) throw Failure{kNumerical, "ECM did not converge within --max-iter"};
  }
};

struct BenchmarkCmd {
  std::string data;
  std::vector<double> grid;
  std::string out = default_out_dir();

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("benchmark", "graphical-lasso baseline networks");
    sub->add_option("--data", data, "dataset manifest JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("--grid", grid, "penalty grid (default 0,0.001,0.01,0.1,1)")->delimiter(',');
    sub->add_option("--out", out, "output directory (default $MSFAX_OUT_DIR)")->capture_default_str();
    sub->callback([this] { run(); });
  }

  void run() {
    Dataset d;
    load_data(data, d);
    Networks nets;
    check(msfax_networks_benchmark(d.get(), grid.empty() ? nullptr : grid.data(), grid.size(), nets.out()),
          "benchmark");
    check(msfax_networks_write(nets.get(), out.c_str(), "", nullptr), "writing networks");
    std::cout << "wrote glasso networks to " << out << "\n";
  }
};

struct EvaluateCmd {
  std::string estimated, truth;
  std::string estimated_prefix, truth_prefix;
  std::string method = "estimate", setting;
  std::string out = default_out_dir();

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("evaluate", "compare estimated networks with true networks");
    sub->add_option("--estimated", estimated, "directory with estimated network CSVs")
        ->required()
        ->check(CLI::ExistingDirectory);
    sub->add_option("--truth", truth, "directory with true network CSVs")->required()->check(CLI::ExistingDirectory);
    sub->add_option("--estimated-prefix", estimated_prefix, "file prefix of the estimated networks");
    sub->add_option("--truth-prefix", truth_prefix, "file prefix of the true networks");
    sub->add_option("--method", method, "method label")->capture_default_str();
    sub->add_option("--setting-label", setting, "setting label");
    sub->add_option("--out", out, "output directory (default $MSFAX_OUT_DIR)")->capture_default_str();
    sub->callback([this] { run(); });
  }

  void run() {
    Networks est, tru;
    check(msfax_networks_load(estimated.c_str(), estimated_prefix.c_str(), est.out()), "loading estimated networks");
    check(msfax_networks_load(truth.c_str(), truth_prefix.c_str(), tru.out()), "loading true networks");
    const fs::path dir(out);
    fs::create_directories(dir);
    check(msfax_evaluate_networks(est.get(), tru.get(), method.c_str(), setting.c_str(),
                                  (dir / "metrics_long.csv").c_str(), (dir / "metrics_summary.csv").c_str()),
          "evaluate");
    std::cout << "wrote metrics to " << out << "\n";
  }
};

struct Table2Cmd {
  std::vector<std::string> settings;
  int reps = 10;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  bool no_estimated = false;
  bool strict = false;
  std::string out = default_out_dir();
  EcmFlags ecm;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("table2", "replicated simulation study summarized by matrix RV");
    sub->add_option("--settings", settings, "settings to run (default: all ten)")->delimiter(',');
    sub->add_option("--reps", reps, "replicates per setting")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--jobs", jobs, "worker threads across replicates")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--setting-seed", seed, "base simulation seed (overrides each setting)");
    sub->add_flag("--no-estimated", no_estimated, "skip the estimated-factor variant");
    sub->add_flag("--strict", strict, "exit with code 3 when any ECM fit does not converge");
    sub->add_option("--out", out, "output directory (default $MSFAX_OUT_DIR)")->capture_default_str();
    ecm.add(sub);
    sub->callback([this] { run(); });
  }

  void run() {
    std::vector<std::string> names = split_list(settings);
    if (names.empty()) {
      for (std::size_t i = 1; i <= msfax_setting_builtin_count(); ++i) names.push_back(std::to_string(i));
    }
    msfax_experiment_options opts;
    msfax_experiment_options_default(&opts);
    opts.jobs = jobs;
    opts.estimated_factors = no_estimated ? 0 : 1;
    opts.ecm = ecm.options();
    Experiment all;
    bool converged = true;
    for (const auto& name : names) {
      Setting s;
      load_setting(name, s);
      if (seed) check(msfax_setting_set_seed(s.get(), *seed), "seed");
      std::cerr << "running " << msfax_setting_name(s.get()) << " (" << reps << " reps)\n";
      Experiment e;
      check(msfax_experiment_run(s.get(), reps, &opts, e.out()), "experiment");
      converged = converged && msfax_experiment_all_converged(e.get());
      if (!all.get()) {
        std::swap(all.ptr, e.ptr);
      } else {
        check(msfax_experiment_merge(all.get(), e.get()), "merge");
      }
    }
    const fs::path dir(out);
    fs::create_directories(dir);
    check(msfax_experiment_write(all.get(), (dir / "metrics_long.csv").c_str(), (dir / "metrics_summary.csv").c_str(),
                                 (dir / "table2.csv").c_str()),
          "writing results");
    std::cout << "wrote " << (dir / "table2.csv").string() << "\n";
    if (msfax_experiment_error_count(all.get()) > 0) {
      std::cerr << "warning: " << msfax_experiment_error_count(all.get()) << " method run(s) failed\n";
    }
    if (strict && !converged) throw Failure{kNumerical, "at least one ECM fit did not converge"};
  }
};

struct NetworkCmd {
  std::string model;
  std::optional<double> alpha;
  std::optional<double> value;
  std::optional<long long> n;
  std::string hubs;
  std::string out = default_out_dir();

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("network", "networks of a fitted model, optionally thresholded, with hub scores");
    sub->add_option("--model", model, "model JSON")->required()->check(CLI::ExistingFile);
    auto* a = sub->add_option("--threshold-alpha", alpha, "family-wise level of the Fisher edge threshold")
                  ->check(CLI::Range(0.0, 1.0));
    auto* v = sub->add_option("--threshold-value", value, "absolute partial-correlation threshold")
                  ->check(CLI::NonNegativeNumber);
    a->excludes(v);
    sub->add_option("--n", n, "sample size for the Fisher threshold (default: total n stored in the model)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--hubs", hubs, "write hub scores (node,group,score) to this CSV");
    sub->add_option("--out", out, "output directory (default $MSFAX_OUT_DIR)")->capture_default_str();
    sub->callback([this] { run(); });
  }

  void run() {
    Model m;
    check(msfax_model_load(model.c_str(), m.out()), "loading model");
    Networks nets;
    check(msfax_networks_from_model(m.get(), nets.out()), "networks");
    std::optional<double> t = value;
    if (alpha) {
      const long long size = n ? *n : msfax_model_total_n(m.get());
      if (size <= 0) throw Failure{kUsage, "--threshold-alpha needs --n when the model records no sample size"};
      double thr = 0.0;
      check(msfax_fisher_threshold(size, static_cast<int>(msfax_model_num_predictors(m.get())), *alpha, &thr),
            "fisher threshold");
      t = thr;
    }
    if (t) {
      check(msfax_networks_threshold(nets.get(), *t), "threshold");
      std::cout << "threshold=" << *t << "\n";
    }
    check(msfax_networks_write(nets.get(), out.c_str(), "", nullptr), "writing networks");
    if (!hubs.empty()) check(msfax_networks_write_hubs(nets.get(), hubs.c_str(), nullptr), "writing hub scores");
    std::cout << "wrote networks to " << out << "\n";
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shared and study-specific Gaussian graphical models from multi-study factor analysis"};
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file mirroring the command-line flags");
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "suppress warnings");
  app.set_version_flag("--version", msfax_version());

  SimulateCmd simulate;
  FitCmd fit;
  BenchmarkCmd benchmark;
  EvaluateCmd evaluate;
  Table2Cmd table2;
  NetworkCmd network;
  simulate.add(app);
  fit.add(app);
  benchmark.add(app);
  evaluate.add(app);
  table2.add(app);
  network.add(app);

  app.parse_complete_callback([&] {
    if (quiet) msfax_set_warning_handler([](const char*, void*) {}, nullptr);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}
