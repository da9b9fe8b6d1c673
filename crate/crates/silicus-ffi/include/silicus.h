#ifndef SILICUS_H
#define SILICUS_H

/* This file is generated by cbindgen from crates/silicus-ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes. Zero is success; anything else is an error and
// `silicus_last_error` carries the detail.
typedef enum {
  SILICUS_STATUS_OK = 0,
  SILICUS_STATUS_INVALID_ARGUMENT = 1,
  SILICUS_STATUS_UTF8 = 2,
  SILICUS_STATUS_UNKNOWN_EXPERIMENT = 3,
  SILICUS_STATUS_RUN = 4,
  SILICUS_STATUS_STORE = 5,
  SILICUS_STATUS_ANALYSIS = 6,
  SILICUS_STATUS_PARSE = 7,
} SilicusStatus;

// Outcome kinds for `silicus_parse_outcome`.
typedef enum {
  SILICUS_OUTCOME_KIND_BINARY_CHOICE = 0,
  SILICUS_OUTCOME_KIND_RATING = 1,
  SILICUS_OUTCOME_KIND_BUDGET_OPTION = 2,
  SILICUS_OUTCOME_KIND_HIRE = 3,
} SilicusOutcomeKind;

// An open run: its manifest, config, and loaded trial records.
typedef struct SilicusRun SilicusRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Last error message on this thread, or NULL. The pointer is valid until
// the next silicus call on the same thread.
const char *silicus_last_error(void);

// Library version as a static string.
const char *silicus_version(void);

// Frees a string returned through a `char **` out-param.
void silicus_string_free(char *s);

// The bid-up rule: effective ask under a wage floor, in cents.
int64_t silicus_apply_min_wage(int64_t ask_cents, int64_t min_wage_cents);

// Executes a built-in experiment on the scripted backend.
//
// `agents` is only meaningful for `status_quo`; pass 100 for the standard
// design. On success `*run_id_out` receives the run id (caller frees).
SilicusStatus silicus_run_scripted(const char *experiment,
                                   const char *store_root,
                                   uint64_t seed,
                                   uint32_t reps,
                                   uint32_t agents,
                                   char **run_id_out);

// Opens a stored run for inspection and export.
SilicusStatus silicus_run_open(const char *store_root, const char *run_id, SilicusRun **out);

// Number of persisted trials in an open run; -1 on a NULL handle.
int64_t silicus_run_trial_count(const SilicusRun *run);

// Planned trial count from the run's manifest; -1 on a NULL handle.
int64_t silicus_run_planned_count(const SilicusRun *run);

// Writes the run's outcome CSV (sorted by trial id) to `path`.
SilicusStatus silicus_run_export_csv(const SilicusRun *run, const char *path);

// Releases a run handle.
void silicus_run_free(SilicusRun *run);

// Fits simplex-constrained type-mixture weights.
//
// `bits` is row-major `n_types x n_scenarios` with entries 0/1; `observed`
// has length `n_scenarios`; `weights_out` receives `n_types` weights.
SilicusStatus silicus_fit_type_mixture(const uint8_t *bits,
                                       uintptr_t n_types,
                                       uintptr_t n_scenarios,
                                       const double *observed,
                                       double *weights_out,
                                       double *mse_out);

// OLS of `y` on an intercept plus `k` regressors.
//
// `x` is row-major `n x k`. `coef_out` and `se_out` receive `k + 1` values
// (intercept first). Either may be NULL to skip.
SilicusStatus silicus_ols(const double *y,
                          uintptr_t n,
                          const double *x,
                          uintptr_t k,
                          double *coef_out,
                          double *se_out,
                          double *r_squared_out);

// Parses a completion against option labels. On success `*index_out` is
// the zero-based option index and `*mode_out` is 0 for strict, 1 for the
// lenient fallback.
SilicusStatus silicus_parse_outcome(SilicusOutcomeKind kind,
                                    const char *text,
                                    const char *const *labels,
                                    uintptr_t n_labels,
                                    uintptr_t *index_out,
                                    uint32_t *mode_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SILICUS_H */
