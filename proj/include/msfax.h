#ifndef MSFAX_H
#define MSFAX_H

#include <stddef.h>
#include <stdint.h>

#if defined(MSFAX_BUILDING_LIBRARY)
#define MSFAX_API __attribute__((visibility("default")))
#else
#define MSFAX_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  MSFAX_OK = 0,
  MSFAX_INVALID_ARGUMENT = 1,
  MSFAX_INFEASIBLE_CONFIGURATION = 2,
  MSFAX_SINGULAR_MATRIX = 3,
  MSFAX_NOT_CONVERGED = 4,
  MSFAX_IO_ERROR = 5,
  MSFAX_PARSE_ERROR = 6,
  MSFAX_OUT_OF_RANGE = 7,
  MSFAX_DEGENERATE = 8,
  MSFAX_INTERNAL_ERROR = 9
} msfax_status;

typedef struct msfax_setting msfax_setting;
typedef struct msfax_dataset msfax_dataset;
typedef struct msfax_model msfax_model;
typedef struct msfax_fit msfax_fit;
typedef struct msfax_factor_estimate msfax_factor_estimate;
typedef struct msfax_networks msfax_networks;
typedef struct msfax_experiment msfax_experiment;

/* Message of the last failed call on this thread ("" if none). */
MSFAX_API const char* msfax_last_error(void);
MSFAX_API const char* msfax_status_string(msfax_status status);
MSFAX_API const char* msfax_version(void);

/* NULL restores the default handler (stderr). */
typedef void (*msfax_warning_fn)(const char* message, void* user_data);
MSFAX_API void msfax_set_warning_handler(msfax_warning_fn fn, void* user_data);

/* Simulation settings */
MSFAX_API msfax_status msfax_setting_builtin(const char* name, msfax_setting** out);
MSFAX_API msfax_status msfax_setting_load(const char* path, msfax_setting** out);
MSFAX_API msfax_status msfax_setting_save(const msfax_setting* setting, const char* path);
MSFAX_API msfax_status msfax_setting_set_seed(msfax_setting* setting, uint64_t seed);
MSFAX_API const char* msfax_setting_name(const msfax_setting* setting);
MSFAX_API size_t msfax_setting_builtin_count(void);
MSFAX_API void msfax_setting_free(msfax_setting* setting);

/* Datasets. Study matrices are row-major n_s x p. */
MSFAX_API msfax_status msfax_dataset_from_arrays(size_t num_studies, const size_t* n, size_t p,
                                                 const double* const* studies, msfax_dataset** out);
MSFAX_API msfax_status msfax_dataset_load(const char* manifest_path, msfax_dataset** out);
MSFAX_API msfax_status msfax_dataset_save(const msfax_dataset* data, const char* dir);
MSFAX_API size_t msfax_dataset_num_studies(const msfax_dataset* data);
MSFAX_API size_t msfax_dataset_num_predictors(const msfax_dataset* data);
MSFAX_API size_t msfax_dataset_study_size(const msfax_dataset* data, size_t study);
MSFAX_API msfax_status msfax_dataset_copy_study(const msfax_dataset* data, size_t study, double* out);
MSFAX_API int msfax_dataset_is_centered(const msfax_dataset* data);
MSFAX_API msfax_status msfax_dataset_center(msfax_dataset* data);
MSFAX_API void msfax_dataset_free(msfax_dataset* data);

/* Draw one dataset (centered) and its true model. Either output may be NULL. */
MSFAX_API msfax_status msfax_simulate(const msfax_setting* setting, msfax_dataset** data, msfax_model** truth);
/* Writes <out_dir>/rep_<r>/ with data/, truth.json and truth network CSVs. */
MSFAX_API msfax_status msfax_simulate_replicates(const msfax_setting* setting, int reps, const char* out_dir);

/* Fitting */
typedef struct {
  int max_iter;
  double rel_tol;
  int n_starts;
  uint64_t seed;
  double ridge;
} msfax_ecm_options;

MSFAX_API void msfax_ecm_options_default(msfax_ecm_options* opts);

/* j has one entry per study. opts may be NULL for the defaults. */
MSFAX_API msfax_status msfax_fit_run(const msfax_dataset* data, int k, const int* j, size_t num_studies,
                                     const msfax_ecm_options* opts, msfax_fit** out);
MSFAX_API int msfax_fit_converged(const msfax_fit* fit);
MSFAX_API int msfax_fit_iterations(const msfax_fit* fit);
MSFAX_API size_t msfax_fit_trace_length(const msfax_fit* fit);
MSFAX_API msfax_status msfax_fit_trace(const msfax_fit* fit, double* out);
MSFAX_API msfax_status msfax_fit_write_trace(const msfax_fit* fit, const char* path);
/* Model with the midpoint noise split applied. */
MSFAX_API msfax_status msfax_fit_model(const msfax_fit* fit, msfax_model** out);
MSFAX_API void msfax_fit_free(msfax_fit* fit);

MSFAX_API msfax_status msfax_estimate_factors(const msfax_dataset* data, const msfax_ecm_options* opts,
                                              msfax_factor_estimate** out);
MSFAX_API int msfax_factor_estimate_k(const msfax_factor_estimate* est);
MSFAX_API size_t msfax_factor_estimate_num_studies(const msfax_factor_estimate* est);
MSFAX_API int msfax_factor_estimate_j(const msfax_factor_estimate* est, size_t study);
MSFAX_API int msfax_factor_estimate_t(const msfax_factor_estimate* est, size_t study);
MSFAX_API msfax_status msfax_factor_estimate_write(const msfax_factor_estimate* est, const char* path);
MSFAX_API void msfax_factor_estimate_free(msfax_factor_estimate* est);

/* Models. `names_from` (nullable) supplies predictor/study names and n. */
MSFAX_API msfax_status msfax_model_load(const char* path, msfax_model** out);
MSFAX_API msfax_status msfax_model_save(const msfax_model* model, const msfax_dataset* names_from, const char* path);
MSFAX_API size_t msfax_model_num_predictors(const msfax_model* model);
MSFAX_API size_t msfax_model_num_studies(const msfax_model* model);
MSFAX_API int msfax_model_shared_factors(const msfax_model* model);
MSFAX_API int msfax_model_specific_factors(const msfax_model* model, size_t study);
/* Total sample size recorded with the model, 0 when unknown. */
MSFAX_API long long msfax_model_total_n(const msfax_model* model);
/* p x p row-major. */
MSFAX_API msfax_status msfax_model_covariance(const msfax_model* model, size_t study, double* out);
MSFAX_API void msfax_model_free(msfax_model* model);

/* Networks. target = -1 selects the shared network, 0..S-1 a study. */
#define MSFAX_SHARED (-1)

MSFAX_API msfax_status msfax_networks_from_model(const msfax_model* model, msfax_networks** out);
/* Graphical-lasso baseline with BIC selection over `grid` (NULL = default grid). */
MSFAX_API msfax_status msfax_networks_benchmark(const msfax_dataset* data, const double* grid, size_t grid_len,
                                                msfax_networks** out);
MSFAX_API msfax_status msfax_networks_load(const char* dir, const char* prefix, msfax_networks** out);
/* names may be NULL (V1..Vp). */
MSFAX_API msfax_status msfax_networks_write(const msfax_networks* nets, const char* dir, const char* prefix,
                                            const char* const* names);
MSFAX_API size_t msfax_networks_size(const msfax_networks* nets);
MSFAX_API size_t msfax_networks_num_studies(const msfax_networks* nets);
MSFAX_API msfax_status msfax_networks_get(const msfax_networks* nets, int target, double* out);
MSFAX_API msfax_status msfax_networks_threshold(msfax_networks* nets, double threshold);
MSFAX_API msfax_status msfax_networks_hub_scores(const msfax_networks* nets, int target, double* out);
/* Appends node,group,score rows for every network (group = shared / study_<s>). */
MSFAX_API msfax_status msfax_networks_write_hubs(const msfax_networks* nets, const char* path,
                                                 const char* const* names);
MSFAX_API void msfax_networks_free(msfax_networks* nets);

/* Metrics on p x p row-major matrices. */
MSFAX_API msfax_status msfax_matrix_rv(const double* a, const double* b, size_t p, double* out);
MSFAX_API msfax_status msfax_relative_euclidean(const double* estimate, const double* truth, size_t p, double* out);
MSFAX_API msfax_status msfax_cosine_similarity(const double* estimate, const double* truth, size_t p, double* out);
/* Compares every network of `estimate` with `truth` and writes long and summary CSVs. */
MSFAX_API msfax_status msfax_evaluate_networks(const msfax_networks* estimate, const msfax_networks* truth,
                                               const char* method, const char* setting, const char* long_csv,
                                               const char* summary_csv);

MSFAX_API msfax_status msfax_fisher_threshold(long long n, int p, double family_alpha, double* out);
MSFAX_API msfax_status msfax_project_onto_factor(const double* x, const double* factor, size_t p, double* out);

/* Metabolite preprocessing on n x p row-major matrices. Masks are nonzero
   where a value is missing; groups may be NULL. */
MSFAX_API msfax_status msfax_log_ratio_preprocess(size_t n, size_t p, const double* fasting, const double* post,
                                                  const unsigned char* fasting_missing,
                                                  const unsigned char* post_missing, const int* groups, double* out);
MSFAX_API msfax_status msfax_covariate_residualize(size_t n, size_t p, const double* y, size_t q,
                                                   const double* covariates, const int* groups, double* out);

/* Replicated simulation experiments. */
typedef struct {
  int true_factors;
  int estimated_factors;
  int glasso;
  int jobs;
  msfax_ecm_options ecm;
} msfax_experiment_options;

MSFAX_API void msfax_experiment_options_default(msfax_experiment_options* opts);
MSFAX_API msfax_status msfax_experiment_run(const msfax_setting* setting, int reps,
                                            const msfax_experiment_options* opts, msfax_experiment** out);
/* Adds the records of `other` to `into`. */
MSFAX_API msfax_status msfax_experiment_merge(msfax_experiment* into, const msfax_experiment* other);
/* Any path may be NULL to skip that file. */
MSFAX_API msfax_status msfax_experiment_write(const msfax_experiment* exp, const char* long_csv,
                                              const char* summary_csv, const char* table2_csv);
MSFAX_API double msfax_experiment_worst_loglik_drop(const msfax_experiment* exp);
MSFAX_API int msfax_experiment_all_converged(const msfax_experiment* exp);
MSFAX_API size_t msfax_experiment_error_count(const msfax_experiment* exp);
/* Median matrix RV for (method, target label, e.g. "Shared" or "Study 1"); NaN if absent. */
MSFAX_API double msfax_experiment_median_rv(const msfax_experiment* exp, const char* method, const char* target);
MSFAX_API void msfax_experiment_free(msfax_experiment* exp);

#ifdef __cplusplus
}
#endif

#endif
