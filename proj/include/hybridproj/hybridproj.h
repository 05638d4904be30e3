#ifndef HYBRIDPROJ_H
#define HYBRIDPROJ_H

/* C interface to the hybridproj solver library. All objects are opaque and
 * owned by the caller once returned; release them with the matching _free.
 * Every function returning hp_status leaves a message for hp_last_error()
 * on failure (thread-local, valid until the next failing call). */

#include <stddef.h>
#include <stdint.h>

#if defined(HYBRIDPROJ_BUILDING)
#define HP_API __attribute__((visibility("default")))
#else
#define HP_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hp_status {
  HP_OK = 0,
  HP_ERR_INVALID_ARGUMENT = 1,
  HP_ERR_DIMENSION_MISMATCH = 2,
  HP_ERR_EMPTY_HALFSPACE = 3,
  HP_ERR_INFEASIBLE = 4,
  HP_ERR_DOMAIN_VIOLATION = 5,
  HP_ERR_SINGULAR_SYSTEM = 6,
  HP_ERR_CLASS_MISMATCH = 7,
  HP_ERR_UNSUPPORTED_DIMENSION = 8,
  HP_ERR_PARSE = 9,
  HP_ERR_VALIDATION = 10,
  HP_ERR_IO = 11,
  HP_ERR_INTERNAL = 100
} hp_status;

typedef struct hp_family hp_family;
typedef struct hp_report hp_report;
typedef struct hp_experiment hp_experiment;
typedef struct hp_results hp_results;
typedef struct hp_speedup hp_speedup;

HP_API const char* hp_version(void);
HP_API const char* hp_last_error(void);
HP_API const char* hp_status_name(hp_status status);

/* ---- mapping families ---- */

/* N threshold maps with t_i = i / (N + 1), s_i = 1 + t_i on [0, 1]. */
HP_API hp_status hp_family_experiment(size_t count, hp_family** out);
/* Explicit thresholds. asymptotic_c > 0 tags the family with k_n = 1 + c/n. */
HP_API hp_status hp_family_threshold(const double* t, const double* s, size_t count,
                                     double asymptotic_c, hp_family** out);
/* Resolvents of x -> M x + q (M row-major, dim x dim) with radii r_i.
 * lower/upper may be NULL for an unbounded domain. */
HP_API hp_status hp_family_resolvent(size_t dim, const double* matrix, const double* shift,
                                     const double* radii, size_t count, const double* lower,
                                     const double* upper, hp_family** out);
HP_API size_t hp_family_size(const hp_family* family);
HP_API size_t hp_family_dim(const hp_family* family);
/* out = T_i^power(x), index 0-based; x and out hold hp_family_dim values. */
HP_API hp_status hp_family_apply(const hp_family* family, size_t index, uint64_t power,
                                 const double* x, double* out);
HP_API void hp_family_free(hp_family* family);

/* ---- single solves ---- */

typedef struct hp_solve_options {
  const char* method;   /* e.g. "phm-mann"; NULL means phm-mann */
  const char* schedule; /* "reciprocal", "log-reciprocal", "power-of-ten", "constant-zero" */
  const double* x_start;
  size_t dim;
  double omega;
  double tol;
  uint64_t max_iter;
  size_t workers;
  const double* known_fixed_point; /* NULL when unknown */
} hp_solve_options;

/* Fills defaults: phm-mann, reciprocal, tol 1e-6, max_iter 1e6, one worker. */
HP_API void hp_solve_options_init(hp_solve_options* options);
HP_API hp_status hp_solve(const hp_family* family, const hp_solve_options* options,
                          hp_report** out);

HP_API uint64_t hp_report_iterations(const hp_report* report);
HP_API const char* hp_report_termination(const hp_report* report);
HP_API size_t hp_report_dim(const hp_report* report);
/* Copies x_final into out (hp_report_dim values). */
HP_API hp_status hp_report_final_x(const hp_report* report, double* out);
HP_API size_t hp_report_trace_length(const hp_report* report);
HP_API double hp_report_wall_seconds(const hp_report* report);
HP_API hp_status hp_report_write_trace(const hp_report* report, const char* path);
HP_API void hp_report_free(hp_report* report);

/* ---- experiment sweeps ---- */

HP_API hp_status hp_experiment_load(const char* path, hp_experiment** out);
HP_API hp_status hp_experiment_parse(const char* text, hp_experiment** out);
HP_API void hp_experiment_free(hp_experiment* experiment);

HP_API hp_status hp_experiment_set_workers(hp_experiment* experiment, const size_t* workers,
                                           size_t count);
HP_API hp_status hp_experiment_set_method(hp_experiment* experiment, const char* method);
HP_API hp_status hp_experiment_set_tolerance(hp_experiment* experiment, double tol);
HP_API hp_status hp_experiment_set_output(hp_experiment* experiment, const char* path);
/* Configured output path, or "" when none. Owned by the experiment. */
HP_API const char* hp_experiment_output(const hp_experiment* experiment);
/* Text form of the validated config. Owned by the experiment. */
HP_API const char* hp_experiment_emit(hp_experiment* experiment);

HP_API hp_status hp_experiment_run(const hp_experiment* experiment, hp_results** out);

typedef struct hp_result_row {
  const char* method;
  const char* schedule;
  double tolerance;
  size_t workers;
  uint64_t iterations;
  double wall_seconds;
  const char* termination; /* "" for rows that failed */
  double final_residual;
  const char* error;       /* "" when none */
} hp_result_row;

HP_API size_t hp_results_count(const hp_results* results);
HP_API size_t hp_results_error_count(const hp_results* results);
/* Strings in *row stay valid while results lives. */
HP_API hp_status hp_results_row(const hp_results* results, size_t index, hp_result_row* row);
HP_API hp_status hp_results_write_csv(const hp_results* results, const char* path);
/* Trace of the first row of the sweep. */
HP_API hp_status hp_results_write_trace(const hp_results* results, const char* path);
/* TOL / T_p / T_s / T_L tables. Owned by results. */
HP_API const char* hp_results_summary(hp_results* results);
HP_API void hp_results_free(hp_results* results);

/* Times the first parallel method of the sweep (first schedule and
 * tolerance) once per worker count, median of `repetitions` runs. */
HP_API hp_status hp_experiment_speedup(const hp_experiment* experiment, const size_t* workers,
                                       size_t count, int repetitions, hp_speedup** out);
HP_API size_t hp_speedup_count(const hp_speedup* table);
HP_API hp_status hp_speedup_row(const hp_speedup* table, size_t index, size_t* workers,
                                double* seconds, uint64_t* iterations, double* speedup);
HP_API int hp_speedup_identical(const hp_speedup* table);
HP_API void hp_speedup_free(hp_speedup* table);

#ifdef __cplusplus
}
#endif

#endif
