/*
 * liblowrank: nuclear-norm regularized estimation of low-rank matrices.
 *
 * Every function returns an lr_status. On failure the message describing the
 * error is available from lr_last_error() on the calling thread until the
 * next call into the library. Objects are opaque handles released with the
 * matching *_free function; passing NULL to a *_free function is a no-op.
 *
 * Matrices cross the boundary as column-major double arrays.
 */
#ifndef LOWRANK_LOWRANK_H
#define LOWRANK_LOWRANK_H

#include <stddef.h>
#include <stdint.h>

#if defined(LOWRANK_BUILDING_LIBRARY)
#define LR_API __attribute__((visibility("default")))
#else
#define LR_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lr_status {
  LR_OK = 0,
  LR_INVALID_ARGUMENT = 1,
  LR_NUMERIC_ERROR = 2,
  LR_IO_ERROR = 3,
  LR_RESOURCE_LIMIT = 4, /* memory budget exceeded or allocation failure */
  LR_INTERNAL_ERROR = 5
} lr_status;

LR_API const char* lr_version(void);
LR_API const char* lr_status_string(lr_status status);
LR_API const char* lr_last_error(void);

typedef struct lr_observations lr_observations;
typedef struct lr_solution lr_solution;
typedef struct lr_experiment lr_experiment;
typedef struct lr_records lr_records;
typedef struct lr_report lr_report;

/* ------------------------------------------------------------------------ */
/* Observation sets */

typedef struct lr_generate_params {
  const char* model;   /* "regression", "var", "compressed" or "identity" */
  int64_t k;           /* rows of the target; <= 0 means k = p */
  int64_t p;
  int64_t r;           /* rank when q == 0 */
  int64_t n;           /* samples (regression, var) or scalar observations (compressed) */
  double nu;           /* noise standard deviation, 0 for noiseless data */
  double gamma;        /* var: operator norm of the system matrix */
  double q;            /* 0: exact rank r; in (0, 1]: near low rank */
  double rq;           /* l_q radius when q > 0 */
  double signal_scale; /* singular values of an exact-rank target (not var) */
  double sigma_scale;  /* regression: covariate covariance sigma_scale * I */
  double budget_bytes; /* compressed: operator memory ceiling */
  uint64_t seed;
} lr_generate_params;

LR_API void lr_generate_params_init(lr_generate_params* params);
LR_API lr_status lr_generate(const lr_generate_params* params, lr_observations** out);
LR_API lr_status lr_observations_save(const lr_observations* obs, const char* path);
LR_API lr_status lr_observations_load(const char* path, lr_observations** out);
LR_API void lr_observations_free(lr_observations* obs);

typedef struct lr_observations_info {
  const char* model; /* static string */
  int64_t k;
  int64_t p;
  int64_t num_observations;
  double noise_level;
  uint64_t seed;
  int has_truth;
} lr_observations_info;

LR_API lr_status lr_observations_get_info(const lr_observations* obs, lr_observations_info* out);
/* Copies the k*p ground truth; fails when the set carries none. */
LR_API lr_status lr_observations_truth(const lr_observations* obs, double* buffer, size_t length);

/* ------------------------------------------------------------------------ */
/* Regularization weight */

typedef struct lr_lambda {
  double value;         /* value of the rule as stated */
  double solver_weight; /* weight per scalar observation handed to the solver */
} lr_lambda;

typedef struct lr_lambda_params {
  double nu;
  double sigma_max;    /* regression: largest eigenvalue of the covariate covariance */
  double sigma_opnorm; /* var: operator norm of the stationary covariance */
  double gamma;        /* var */
  int64_t k;
  int64_t p;
  int64_t n;
} lr_lambda_params;

/* rule: "multivar", "var" or "compressed". */
LR_API lr_status lr_lambda_rule(const char* rule, const lr_lambda_params* params, lr_lambda* out);
/* Twice the 95th percentile of ||adjoint(noise)||op / N over `draws` noise draws. */
LR_API lr_status lr_lambda_generic(const lr_observations* obs, int draws, uint64_t seed, lr_lambda* out);
/* Evaluates `rule` ("auto", "multivar", "var", "compressed" or "generic") with
   the parameters carried by `obs`. "auto" picks the default rule of the model;
   `draws` and `seed` are used by the generic rule. */
LR_API lr_status lr_lambda_select(const lr_observations* obs, const char* rule, int draws, uint64_t seed,
                                  lr_lambda* out);

/* ------------------------------------------------------------------------ */
/* Solver */

typedef struct lr_solver_params {
  double lambda;
  int max_iters;
  double rel_tol;
  double step; /* <= 0: 0.99 / estimated Lipschitz constant */
  int acceleration;
  int power_iters;
} lr_solver_params;

LR_API void lr_solver_params_init(lr_solver_params* params);
LR_API lr_status lr_solve(const lr_observations* obs, const lr_solver_params* params, lr_solution** out);
/* Continuation for noiseless data; params->lambda is ignored. lambda0 <= 0 selects the default. */
LR_API lr_status lr_solve_noiseless(const lr_observations* obs, const lr_solver_params* params, double lambda0,
                                    double decay, int stages, lr_solution** out);
LR_API void lr_solution_free(lr_solution* solution);

typedef struct lr_solution_info {
  int64_t rows;
  int64_t cols;
  int iterations;
  int converged;
  double lambda;
  double step;
  double objective;
  size_t trace_length;
  double optimality_residual;
  double alignment_residual;
  double data_residual;
  int64_t rank;
} lr_solution_info;

LR_API lr_status lr_solution_get_info(const lr_solution* solution, lr_solution_info* out);
LR_API lr_status lr_solution_theta(const lr_solution* solution, double* buffer, size_t length);
LR_API lr_status lr_solution_trace(const lr_solution* solution, double* buffer, size_t length);

typedef struct lr_errors {
  double frob;
  double relative;
  double nuclear;
} lr_errors;

/* Errors of the estimate against the ground truth carried by `obs`. */
LR_API lr_status lr_solution_errors(const lr_solution* solution, const lr_observations* obs, lr_errors* out);

/* ------------------------------------------------------------------------ */
/* Experiments */

LR_API lr_status lr_experiment_create(lr_experiment** out);
LR_API lr_status lr_experiment_load(const char* path, lr_experiment** out);
/* Sets one configuration key with the same syntax as the config file. */
LR_API lr_status lr_experiment_set(lr_experiment* cfg, const char* key, const char* value);
LR_API lr_status lr_experiment_validate(const lr_experiment* cfg);
/* Empty string when unset. Valid until the next change of `cfg`. */
LR_API lr_status lr_experiment_output_path(const lr_experiment* cfg, const char** out);
LR_API lr_status lr_experiment_run(const lr_experiment* cfg, lr_records** out);
LR_API void lr_experiment_free(lr_experiment* cfg);

typedef struct lr_record {
  const char* model; /* valid while the record table lives */
  int64_t p, k, r, n_obs;
  double rescaled_n;
  int trial;
  uint64_t seed;
  double lambda;
  double frob_error;
  double relative_error;
  double nuclear_error;
  int iterations;
  double runtime_ms;
  double bound_value;
  double bound_ratio;
  int failed;
  const char* failure; /* empty unless failed */
} lr_record;

LR_API lr_status lr_records_count(const lr_records* records, size_t* total, size_t* failed);
LR_API lr_status lr_records_get(const lr_records* records, size_t index, lr_record* out);
LR_API lr_status lr_records_write_csv(const lr_records* records, const char* path);
LR_API lr_status lr_records_write_failures(const lr_records* records, const char* path);
LR_API lr_status lr_records_write_plot(const lr_records* records, const char* path);
LR_API lr_status lr_records_read_csv(const char* path, lr_records** out);
LR_API lr_status lr_records_collapse(const lr_records* records, double rescaled_n, double* spread);
LR_API void lr_records_free(lr_records* records);

/* ------------------------------------------------------------------------ */
/* Frequency checks */

typedef struct lr_check_params {
  const char* kind; /* "wishart", "var", "prop1" or "meta" */
  int64_t k;        /* prop1; <= 0 means k = p */
  int64_t p;        /* wishart, var, prop1 */
  int64_t n;        /* samples (wishart, var, meta) or observations (prop1) */
  int64_t r;        /* var: rank of the system matrix */
  double gamma;     /* var */
  double nu;        /* var */
  double t;         /* meta */
  int trials;
  int test_matrices; /* prop1 */
  uint64_t seed;
  unsigned workers;
} lr_check_params;

LR_API void lr_check_params_init(lr_check_params* params);
LR_API lr_status lr_check_run(const lr_check_params* params, lr_report** out);
LR_API void lr_report_free(lr_report* report);

typedef struct lr_report_info {
  int trials;
  int passes;
  double pass_rate;
  double theoretical_floor;
  double floor_standard_error;
  int meets_floor;
} lr_report_info;

LR_API lr_status lr_report_get_info(const lr_report* report, lr_report_info* out);
/* Multi-line human-readable summary, valid while the report lives. */
LR_API lr_status lr_report_summary(const lr_report* report, const char** out);
LR_API lr_status lr_report_write_csv(const lr_report* report, const char* path);

#ifdef __cplusplus
}
#endif

#endif
