#include "msfax.h"

#include <cmath>
#include <cstring>
#include <limits>
#include <new>
#include <numeric>
#include <string>

#include "msfax/benchmark.hpp"
#include "msfax/decompose.hpp"
#include "msfax/experiment.hpp"
#include "msfax/io.hpp"
#include "msfax/log.hpp"
#include "msfax/metrics.hpp"
#include "msfax/netstats.hpp"

struct msfax_setting {
  msfax::SimulationSetting value;
};

struct msfax_dataset {
  msfax::MultiStudyDataset value;
};

struct msfax_model {
  msfax::io::ModelDocument doc;
};

struct msfax_fit {
  msfax::EcmFit value;
  std::vector<std::string> predictor_names;
  std::vector<std::string> study_names;
  std::vector<long long> n;
};

struct msfax_factor_estimate {
  msfax::FactorCountEstimate value;
};

struct msfax_networks {
  msfax::NetworkSet value;
  std::vector<std::string> names;
};

struct msfax_experiment {
  msfax::ExperimentResult value;
};

namespace {

using msfax::ErrorCode;
using msfax::Matrix;
using msfax::Vector;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

thread_local std::string last_error;

msfax_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return MSFAX_INVALID_ARGUMENT;
    case ErrorCode::infeasible_configuration: return MSFAX_INFEASIBLE_CONFIGURATION;
    case ErrorCode::singular_matrix: return MSFAX_SINGULAR_MATRIX;
    case ErrorCode::not_converged: return MSFAX_NOT_CONVERGED;
    case ErrorCode::io: return MSFAX_IO_ERROR;
    case ErrorCode::parse: return MSFAX_PARSE_ERROR;
    case ErrorCode::out_of_range: return MSFAX_OUT_OF_RANGE;
    case ErrorCode::degenerate: return MSFAX_DEGENERATE;
  }
  return MSFAX_INTERNAL_ERROR;
}

template <typename F>
msfax_status guard(F&& body) {
  try {
    body();
    last_error.clear();
    return MSFAX_OK;
  } catch (const msfax::Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return MSFAX_INTERNAL_ERROR;
  } catch (const std::exception& e) {
    last_error = e.what();
    return MSFAX_INTERNAL_ERROR;
  } catch (...) {
    last_error = "unknown error";
    return MSFAX_INTERNAL_ERROR;
  }
}

template <typename T>
const T& ref(const T* ptr, const char* what) {
  if (!ptr) msfax::fail(ErrorCode::invalid_argument, std::string(what) + " must not be NULL");
  return *ptr;
}

template <typename T>
T& ref(T* ptr, const char* what) {
  if (!ptr) msfax::fail(ErrorCode::invalid_argument, std::string(what) + " must not be NULL");
  return *ptr;
}

template <typename T>
T* need(T* ptr, const char* what) {
  if (!ptr) msfax::fail(ErrorCode::invalid_argument, std::string(what) + " must not be NULL");
  return ptr;
}

Matrix read_square(const double* data, std::size_t p, const char* what) {
  need(data, what);
  const auto n = static_cast<Eigen::Index>(p);
  return Eigen::Map<const RowMatrix>(data, n, n);
}

void write_rowmajor(const Matrix& m, double* out) {
  Eigen::Map<RowMatrix>(out, m.rows(), m.cols()) = m;
}

msfax::EcmOptions ecm_options(const msfax_ecm_options* opts) {
  msfax::EcmOptions o;
  if (opts) {
    o.max_iter = opts->max_iter;
    o.rel_tol = opts->rel_tol;
    o.n_starts = opts->n_starts;
    o.seed = opts->seed;
    o.ridge = opts->ridge;
  }
  o.validate();
  return o;
}

const msfax::GgmNetwork& pick(const msfax::NetworkSet& nets, int target) {
  if (target == MSFAX_SHARED) return nets.shared;
  if (target < 0 || static_cast<std::size_t>(target) >= nets.specific.size()) {
    msfax::fail(ErrorCode::out_of_range, "network target " + std::to_string(target) + " out of range");
  }
  return nets.specific[static_cast<std::size_t>(target)];
}

std::vector<std::string> node_names(const char* const* names, std::size_t p, const std::vector<std::string>& fallback) {
  std::vector<std::string> out;
  if (names) {
    for (std::size_t i = 0; i < p; ++i) out.emplace_back(need(names[i], "names[i]"));
  } else if (fallback.size() == p) {
    out = fallback;
  } else {
    for (std::size_t i = 0; i < p; ++i) out.push_back("V" + std::to_string(i + 1));
  }
  return out;
}

std::vector<long long> sample_sizes(const msfax::MultiStudyDataset& data) {
  std::vector<long long> n;
  for (std::size_t s = 0; s < data.num_studies(); ++s) n.push_back(static_cast<long long>(data.study_size(s)));
  return n;
}

}  // namespace

extern "C" {

const char* msfax_last_error(void) { return last_error.c_str(); }

const char* msfax_status_string(msfax_status status) {
  switch (status) {
    case MSFAX_OK: return "ok";
    case MSFAX_INVALID_ARGUMENT: return "invalid argument";
    case MSFAX_INFEASIBLE_CONFIGURATION: return "infeasible configuration";
    case MSFAX_SINGULAR_MATRIX: return "singular matrix";
    case MSFAX_NOT_CONVERGED: return "not converged";
    case MSFAX_IO_ERROR: return "i/o error";
    case MSFAX_PARSE_ERROR: return "parse error";
    case MSFAX_OUT_OF_RANGE: return "out of range";
    case MSFAX_DEGENERATE: return "degenerate input";
    case MSFAX_INTERNAL_ERROR: return "internal error";
  }
  return "unknown status";
}

const char* msfax_version(void) { return "0.1.0"; }

void msfax_set_warning_handler(msfax_warning_fn fn, void* user_data) {
  if (!fn) {
    msfax::set_warning_handler({});
    return;
  }
  msfax::set_warning_handler([fn, user_data](const std::string& msg) { fn(msg.c_str(), user_data); });
}

// settings

msfax_status msfax_setting_builtin(const char* name, msfax_setting** out) {
  return guard([&] {
    need(out, "out");
    *out = new msfax_setting{msfax::builtin_setting(need(name, "name"))};
  });
}

msfax_status msfax_setting_load(const char* path, msfax_setting** out) {
  return guard([&] {
    need(out, "out");
    *out = new msfax_setting{msfax::io::load_setting(need(path, "path"))};
  });
}

msfax_status msfax_setting_save(const msfax_setting* setting, const char* path) {
  return guard([&] {
    const std::string text = msfax::io::setting_to_json(ref(setting, "setting").value);
    const std::filesystem::path file(need(path, "path"));
    if (file.has_parent_path()) msfax::io::ensure_directory(file.parent_path());
    std::FILE* f = std::fopen(path, "wb");
    if (!f) msfax::fail(ErrorCode::io, std::string("cannot open '") + path + "' for writing");
    const bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
    if (std::fclose(f) != 0 || !ok) msfax::fail(ErrorCode::io, std::string("failed writing '") + path + "'");
  });
}

msfax_status msfax_setting_set_seed(msfax_setting* setting, uint64_t seed) {
  return guard([&] { ref(setting, "setting").value.seed = seed; });
}

const char* msfax_setting_name(const msfax_setting* setting) { return setting ? setting->value.name.c_str() : ""; }

size_t msfax_setting_builtin_count(void) { return msfax::builtin_settings().size(); }

void msfax_setting_free(msfax_setting* setting) { delete setting; }

// datasets

msfax_status msfax_dataset_from_arrays(size_t num_studies, const size_t* n, size_t p, const double* const* studies,
                                       msfax_dataset** out) {
  return guard([&] {
    need(out, "out");
    need(n, "n");
    need(studies, "studies");
    std::vector<Matrix> mats;
    for (std::size_t s = 0; s < num_studies; ++s) {
      mats.emplace_back(Eigen::Map<const RowMatrix>(need(studies[s], "studies[s]"), static_cast<Eigen::Index>(n[s]),
                                                    static_cast<Eigen::Index>(p)));
    }
    *out = new msfax_dataset{msfax::MultiStudyDataset(std::move(mats))};
  });
}

msfax_status msfax_dataset_load(const char* manifest_path, msfax_dataset** out) {
  return guard([&] {
    need(out, "out");
    *out = new msfax_dataset{msfax::io::load_dataset(need(manifest_path, "manifest_path"))};
  });
}

msfax_status msfax_dataset_save(const msfax_dataset* data, const char* dir) {
  return guard([&] { msfax::io::save_dataset(need(dir, "dir"), ref(data, "data").value); });
}

size_t msfax_dataset_num_studies(const msfax_dataset* data) { return data ? data->value.num_studies() : 0; }

size_t msfax_dataset_num_predictors(const msfax_dataset* data) { return data ? data->value.num_predictors() : 0; }

size_t msfax_dataset_study_size(const msfax_dataset* data, size_t study) {
  if (!data || study >= data->value.num_studies()) return 0;
  return data->value.study_size(study);
}

msfax_status msfax_dataset_copy_study(const msfax_dataset* data, size_t study, double* out) {
  return guard([&] {
    need(out, "out");
    write_rowmajor(ref(data, "data").value.study(study), out);
  });
}

int msfax_dataset_is_centered(const msfax_dataset* data) { return data && data->value.is_centered() ? 1 : 0; }

msfax_status msfax_dataset_center(msfax_dataset* data) {
  return guard([&] {
    auto& d = ref(data, "data");
    d.value = d.value.centered();
  });
}

void msfax_dataset_free(msfax_dataset* data) { delete data; }

// simulation

msfax_status msfax_simulate(const msfax_setting* setting, msfax_dataset** data, msfax_model** truth) {
  return guard([&] {
    const auto& s = ref(setting, "setting").value;
    s.validate();
    msfax::SimulatedData sim = msfax::generate_dataset(s);
    std::vector<long long> n = sample_sizes(sim.data);
    if (truth) {
      *truth = new msfax_model{{sim.truth, sim.data.predictor_names(), sim.data.study_names(), n}};
    }
    if (data) *data = new msfax_dataset{std::move(sim.data)};
  });
}

msfax_status msfax_simulate_replicates(const msfax_setting* setting, int reps, const char* out_dir) {
  return guard([&] {
    const auto& s = ref(setting, "setting").value;
    const std::filesystem::path root(need(out_dir, "out_dir"));
    msfax::require(reps >= 1, "reps must be positive");
    s.validate();
    for (int r = 1; r <= reps; ++r) {
      msfax::SimulationSetting local = s;
      local.seed = msfax::replicate_seed(s.seed, r);
      const msfax::SimulatedData sim = msfax::generate_dataset(local);
      const auto dir = root / ("rep_" + std::to_string(r));
      msfax::io::save_dataset(dir / "data", sim.data);
      msfax::io::save_model(dir / "truth.json",
                            {sim.truth, sim.data.predictor_names(), sim.data.study_names(), sample_sizes(sim.data)});
      msfax::io::write_network_set(dir / "truth", "", sim.true_networks, sim.data.predictor_names());
    }
  });
}

// fitting

void msfax_ecm_options_default(msfax_ecm_options* opts) {
  if (!opts) return;
  const msfax::EcmOptions d;
  opts->max_iter = d.max_iter;
  opts->rel_tol = d.rel_tol;
  opts->n_starts = d.n_starts;
  opts->seed = d.seed;
  opts->ridge = d.ridge;
}

msfax_status msfax_fit_run(const msfax_dataset* data, int k, const int* j, size_t num_studies,
                       const msfax_ecm_options* opts, msfax_fit** out) {
  return guard([&] {
    need(out, "out");
    need(j, "j");
    const auto& d = ref(data, "data").value;
    msfax::require(num_studies == d.num_studies(), "j needs one entry per study");
    const std::vector<int> jv(j, j + num_studies);
    msfax::EcmFit fit = msfax::fit_msfa(d, k, jv, ecm_options(opts));
    *out = new msfax_fit{std::move(fit), d.predictor_names(), d.study_names(), sample_sizes(d)};
  });
}

int msfax_fit_converged(const msfax_fit* fit) { return fit && fit->value.converged ? 1 : 0; }

int msfax_fit_iterations(const msfax_fit* fit) { return fit ? fit->value.n_iter : 0; }

size_t msfax_fit_trace_length(const msfax_fit* fit) { return fit ? fit->value.loglik_trace.size() : 0; }

msfax_status msfax_fit_trace(const msfax_fit* fit, double* out) {
  return guard([&] {
    const auto& t = ref(fit, "fit").value.loglik_trace;
    need(out, "out");
    std::copy(t.begin(), t.end(), out);
  });
}

msfax_status msfax_fit_write_trace(const msfax_fit* fit, const char* path) {
  return guard([&] { msfax::io::write_loglik_trace(need(path, "path"), ref(fit, "fit").value.loglik_trace); });
}

msfax_status msfax_fit_model(const msfax_fit* fit, msfax_model** out) {
  return guard([&] {
    need(out, "out");
    const auto& f = ref(fit, "fit");
    msfax::FitNetworks nets = msfax::networks_from_fit(f.value);
    *out = new msfax_model{{std::move(nets.model), f.predictor_names, f.study_names, f.n}};
  });
}

void msfax_fit_free(msfax_fit* fit) { delete fit; }

msfax_status msfax_estimate_factors(const msfax_dataset* data, const msfax_ecm_options* opts,
                                    msfax_factor_estimate** out) {
  return guard([&] {
    need(out, "out");
    *out = new msfax_factor_estimate{msfax::estimate_factor_counts(ref(data, "data").value, ecm_options(opts))};
  });
}

int msfax_factor_estimate_k(const msfax_factor_estimate* est) { return est ? est->value.k : 0; }

size_t msfax_factor_estimate_num_studies(const msfax_factor_estimate* est) { return est ? est->value.j.size() : 0; }

int msfax_factor_estimate_j(const msfax_factor_estimate* est, size_t study) {
  return est && study < est->value.j.size() ? est->value.j[study] : 0;
}

int msfax_factor_estimate_t(const msfax_factor_estimate* est, size_t study) {
  return est && study < est->value.total_per_study.size() ? est->value.total_per_study[study] : 0;
}

msfax_status msfax_factor_estimate_write(const msfax_factor_estimate* est, const char* path) {
  return guard([&] {
    const std::string text = msfax::io::factor_estimate_to_json(ref(est, "est").value);
    const std::filesystem::path file(need(path, "path"));
    if (file.has_parent_path()) msfax::io::ensure_directory(file.parent_path());
    std::FILE* f = std::fopen(path, "wb");
    if (!f) msfax::fail(ErrorCode::io, std::string("cannot open '") + path + "' for writing");
    const bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
    if (std::fclose(f) != 0 || !ok) msfax::fail(ErrorCode::io, std::string("failed writing '") + path + "'");
  });
}

void msfax_factor_estimate_free(msfax_factor_estimate* est) { delete est; }

// models

msfax_status msfax_model_load(const char* path, msfax_model** out) {
  return guard([&] {
    need(out, "out");
    *out = new msfax_model{msfax::io::load_model(need(path, "path"))};
  });
}

msfax_status msfax_model_save(const msfax_model* model, const msfax_dataset* names_from, const char* path) {
  return guard([&] {
    msfax::io::ModelDocument doc = ref(model, "model").doc;
    if (names_from) {
      doc.predictor_names = names_from->value.predictor_names();
      doc.study_names = names_from->value.study_names();
      doc.n = sample_sizes(names_from->value);
    }
    msfax::io::save_model(need(path, "path"), doc);
  });
}

size_t msfax_model_num_predictors(const msfax_model* model) {
  return model ? static_cast<size_t>(model->doc.model.num_predictors()) : 0;
}

size_t msfax_model_num_studies(const msfax_model* model) { return model ? model->doc.model.num_studies() : 0; }

int msfax_model_shared_factors(const msfax_model* model) { return model ? model->doc.model.shared_factors() : 0; }

int msfax_model_specific_factors(const msfax_model* model, size_t study) {
  if (!model || study >= model->doc.model.num_studies()) return 0;
  return model->doc.model.specific_factors()[study];
}

long long msfax_model_total_n(const msfax_model* model) {
  if (!model) return 0;
  return std::accumulate(model->doc.n.begin(), model->doc.n.end(), 0LL);
}

msfax_status msfax_model_covariance(const msfax_model* model, size_t study, double* out) {
  return guard([&] {
    need(out, "out");
    write_rowmajor(msfax::covariance_from_model(ref(model, "model").doc.model, study), out);
  });
}

void msfax_model_free(msfax_model* model) { delete model; }

// networks

msfax_status msfax_networks_from_model(const msfax_model* model, msfax_networks** out) {
  return guard([&] {
    need(out, "out");
    const auto& m = ref(model, "model");
    *out = new msfax_networks{msfax::networks_from_model(m.doc.model), m.doc.predictor_names};
  });
}

msfax_status msfax_networks_benchmark(const msfax_dataset* data, const double* grid, size_t grid_len,
                                      msfax_networks** out) {
  return guard([&] {
    need(out, "out");
    const auto& d = ref(data, "data").value;
    msfax::GlassoOptions opts;
    if (grid) opts.lambda_grid.assign(grid, grid + grid_len);
    opts.validate();
    *out = new msfax_networks{msfax::benchmark_networks(d, opts), d.predictor_names()};
  });
}

msfax_status msfax_networks_load(const char* dir, const char* prefix, msfax_networks** out) {
  return guard([&] {
    need(out, "out");
    const std::filesystem::path root(need(dir, "dir"));
    const std::string pre = prefix ? prefix : "";
    msfax::NetworkSet nets = msfax::io::read_network_set(root, pre);
    const auto header = msfax::io::read_csv_matrix(root / ((pre.empty() ? "" : pre + "_") + "shared.csv")).header;
    *out = new msfax_networks{std::move(nets), header};
  });
}

msfax_status msfax_networks_write(const msfax_networks* nets, const char* dir, const char* prefix,
                                  const char* const* names) {
  return guard([&] {
    const auto& n = ref(nets, "nets");
    const auto p = static_cast<std::size_t>(n.value.shared.size());
    msfax::io::write_network_set(need(dir, "dir"), prefix ? prefix : "", n.value, node_names(names, p, n.names));
  });
}

size_t msfax_networks_size(const msfax_networks* nets) {
  return nets ? static_cast<size_t>(nets->value.shared.size()) : 0;
}

size_t msfax_networks_num_studies(const msfax_networks* nets) { return nets ? nets->value.specific.size() : 0; }

msfax_status msfax_networks_get(const msfax_networks* nets, int target, double* out) {
  return guard([&] {
    need(out, "out");
    write_rowmajor(pick(ref(nets, "nets").value, target).matrix(), out);
  });
}

msfax_status msfax_networks_threshold(msfax_networks* nets, double threshold) {
  return guard([&] {
    auto& n = ref(nets, "nets").value;
    n.shared = msfax::threshold_network(n.shared, threshold);
    for (auto& g : n.specific) g = msfax::threshold_network(g, threshold);
  });
}

msfax_status msfax_networks_hub_scores(const msfax_networks* nets, int target, double* out) {
  return guard([&] {
    need(out, "out");
    const Vector h = msfax::hub_scores(pick(ref(nets, "nets").value, target));
    std::copy(h.data(), h.data() + h.size(), out);
  });
}

msfax_status msfax_networks_write_hubs(const msfax_networks* nets, const char* path, const char* const* names) {
  return guard([&] {
    const auto& n = ref(nets, "nets");
    need(path, "path");
    const auto names_v = node_names(names, static_cast<std::size_t>(n.value.shared.size()), n.names);
    msfax::io::write_hub_scores(path, names_v, "shared", msfax::hub_scores(n.value.shared), false);
    for (std::size_t s = 0; s < n.value.specific.size(); ++s) {
      msfax::io::write_hub_scores(path, names_v, "study_" + std::to_string(s + 1),
                                  msfax::hub_scores(n.value.specific[s]), true);
    }
  });
}

void msfax_networks_free(msfax_networks* nets) { delete nets; }

// metrics

msfax_status msfax_matrix_rv(const double* a, const double* b, size_t p, double* out) {
  return guard([&] { *need(out, "out") = msfax::matrix_rv(read_square(a, p, "a"), read_square(b, p, "b")); });
}

msfax_status msfax_relative_euclidean(const double* estimate, const double* truth, size_t p, double* out) {
  return guard([&] {
    *need(out, "out") = msfax::relative_euclidean(msfax::GgmNetwork(read_square(estimate, p, "estimate"), true),
                                                 msfax::GgmNetwork(read_square(truth, p, "truth"), true));
  });
}

msfax_status msfax_cosine_similarity(const double* estimate, const double* truth, size_t p, double* out) {
  return guard([&] {
    *need(out, "out") = msfax::cosine_similarity(msfax::GgmNetwork(read_square(estimate, p, "estimate"), true),
                                                msfax::GgmNetwork(read_square(truth, p, "truth"), true));
  });
}

msfax_status msfax_evaluate_networks(const msfax_networks* estimate, const msfax_networks* truth, const char* method,
                                     const char* setting, const char* long_csv, const char* summary_csv) {
  return guard([&] {
    const auto& est = ref(estimate, "estimate").value;
    const auto& tru = ref(truth, "truth").value;
    msfax::require(est.shared.size() == tru.shared.size(), "networks differ in size");
    msfax::require(est.specific.size() == tru.specific.size(), "networks differ in the number of studies");
    std::vector<msfax::MetricRecord> records;
    auto add = [&](const msfax::GgmNetwork& e, const msfax::GgmNetwork& t, const std::string& target) {
      msfax::MetricRecord r = msfax::evaluate_network(e, t);
      r.method = method ? method : "estimate";
      r.setting = setting ? setting : "";
      r.target = target;
      r.replicate = 1;
      records.push_back(std::move(r));
    };
    add(est.shared, tru.shared, msfax::target_label(0, true));
    for (std::size_t s = 0; s < est.specific.size(); ++s) {
      add(est.specific[s], tru.specific[s], msfax::target_label(s, false));
    }
    if (long_csv) msfax::io::write_metrics_long(long_csv, records);
    if (summary_csv) msfax::io::write_metrics_summary(summary_csv, records);
  });
}

msfax_status msfax_fisher_threshold(long long n, int p, double family_alpha, double* out) {
  return guard([&] { *need(out, "out") = msfax::fisher_threshold(n, p, family_alpha); });
}

msfax_status msfax_project_onto_factor(const double* x, const double* factor, size_t p, double* out) {
  return guard([&] {
    const auto n = static_cast<Eigen::Index>(p);
    *need(out, "out") = msfax::project_onto_factor(Eigen::Map<const Vector>(need(x, "x"), n),
                                                  Eigen::Map<const Vector>(need(factor, "factor"), n));
  });
}

msfax_status msfax_log_ratio_preprocess(size_t n, size_t p, const double* fasting, const double* post,
                                        const unsigned char* fasting_missing, const unsigned char* post_missing,
                                        const int* groups, double* out) {
  return guard([&] {
    need(out, "out");
    const auto rows = static_cast<Eigen::Index>(n), cols = static_cast<Eigen::Index>(p);
    msfax::LogRatioInput in;
    in.fasting = Eigen::Map<const RowMatrix>(need(fasting, "fasting"), rows, cols);
    in.post = Eigen::Map<const RowMatrix>(need(post, "post"), rows, cols);
    using Mask = Eigen::Array<unsigned char, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    in.fasting_missing = fasting_missing ? (Eigen::Map<const Mask>(fasting_missing, rows, cols) != 0).eval()
                                         : decltype(in.fasting_missing)::Constant(rows, cols, false);
    in.post_missing = post_missing ? (Eigen::Map<const Mask>(post_missing, rows, cols) != 0).eval()
                                   : decltype(in.post_missing)::Constant(rows, cols, false);
    if (groups) in.groups.assign(groups, groups + n);
    write_rowmajor(msfax::log_ratio_preprocess(in), out);
  });
}

msfax_status msfax_covariate_residualize(size_t n, size_t p, const double* y, size_t q, const double* covariates,
                                         const int* groups, double* out) {
  return guard([&] {
    need(out, "out");
    const auto rows = static_cast<Eigen::Index>(n);
    const Matrix ym = Eigen::Map<const RowMatrix>(need(y, "y"), rows, static_cast<Eigen::Index>(p));
    const Matrix cm = Eigen::Map<const RowMatrix>(need(covariates, "covariates"), rows, static_cast<Eigen::Index>(q));
    std::vector<int> g;
    if (groups) g.assign(groups, groups + n);
    write_rowmajor(msfax::covariate_residualize(ym, cm, g), out);
  });
}

// experiments

void msfax_experiment_options_default(msfax_experiment_options* opts) {
  if (!opts) return;
  opts->true_factors = 1;
  opts->estimated_factors = 1;
  opts->glasso = 1;
  opts->jobs = 1;
  msfax_ecm_options_default(&opts->ecm);
}

msfax_status msfax_experiment_run(const msfax_setting* setting, int reps, const msfax_experiment_options* opts,
                                  msfax_experiment** out) {
  return guard([&] {
    need(out, "out");
    msfax::ExperimentOptions o;
    if (opts) {
      o.true_factors = opts->true_factors != 0;
      o.estimated_factors = opts->estimated_factors != 0;
      o.glasso = opts->glasso != 0;
      o.jobs = opts->jobs;
      o.ecm = ecm_options(&opts->ecm);
    }
    *out = new msfax_experiment{msfax::run_experiment(ref(setting, "setting").value, reps, o)};
  });
}

msfax_status msfax_experiment_merge(msfax_experiment* into, const msfax_experiment* other) {
  return guard([&] {
    auto& dst = ref(into, "into").value.replicates;
    const auto& src = ref(other, "other").value.replicates;
    dst.insert(dst.end(), src.begin(), src.end());
  });
}

msfax_status msfax_experiment_write(const msfax_experiment* exp, const char* long_csv, const char* summary_csv,
                                    const char* table2_csv) {
  return guard([&] {
    const auto records = ref(exp, "exp").value.records();
    if (long_csv) msfax::io::write_metrics_long(long_csv, records);
    if (summary_csv) msfax::io::write_metrics_summary(summary_csv, records);
    if (table2_csv) msfax::io::write_table2(table2_csv, records);
  });
}

double msfax_experiment_worst_loglik_drop(const msfax_experiment* exp) {
  return exp ? exp->value.worst_loglik_drop() : std::numeric_limits<double>::quiet_NaN();
}

int msfax_experiment_all_converged(const msfax_experiment* exp) {
  if (!exp) return 0;
  for (const auto& r : exp->value.replicates) {
    if (!r.all_converged) return 0;
  }
  return 1;
}

size_t msfax_experiment_error_count(const msfax_experiment* exp) {
  if (!exp) return 0;
  size_t n = 0;
  for (const auto& r : exp->value.replicates) n += r.errors.size();
  return n;
}

double msfax_experiment_median_rv(const msfax_experiment* exp, const char* method, const char* target) {
  if (!exp || !method || !target) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> values;
  for (const auto& r : exp->value.records()) {
    if (r.method == method && r.target == target) values.push_back(r.matrix_rv);
  }
  return msfax::summarize(values).median;
}

void msfax_experiment_free(msfax_experiment* exp) { delete exp; }

}  // extern "C"
