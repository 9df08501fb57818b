/* SPDX-License-Identifier: Apache-2.0 */
#ifndef PAOI_PAOI_H
#define PAOI_PAOI_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PAOI_API __declspec(dllexport)
#else
#define PAOI_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum paoi_status {
  PAOI_OK = 0,
  PAOI_ERR_DOMAIN = 1,
  PAOI_ERR_VALIDATION = 2,
  PAOI_ERR_CONFIG = 3,
  PAOI_ERR_NUMERICAL = 4,
  PAOI_ERR_NO_ROOT = 5,
  PAOI_ERR_INVALID_CURVATURE = 6,
  PAOI_ERR_TOO_LARGE = 7,
  PAOI_ERR_INSUFFICIENT_RECORDS = 8,
  PAOI_ERR_REGIME_VIOLATED = 9,
  PAOI_ERR_EMPTY_INPUT = 10,
  PAOI_ERR_BUDGET_EXCEEDED = 11,
  PAOI_ERR_IO = 12,
  PAOI_ERR_NULL_ARGUMENT = 13,
  PAOI_ERR_INTERNAL = 14
} paoi_status;

typedef enum paoi_service_kind { PAOI_SERVICE_EXPONENTIAL = 0, PAOI_SERVICE_DETERMINISTIC = 1 } paoi_service_kind;
typedef enum paoi_pmf_mode { PAOI_PMF_QUADRATURE = 0, PAOI_PMF_FOG = 1, PAOI_PMF_ORACLE = 2 } paoi_pmf_mode;

/* Message for the last failing call on this thread; never NULL. */
PAOI_API const char* paoi_last_error(void);
PAOI_API const char* paoi_status_name(paoi_status status);
PAOI_API const char* paoi_version(void);

/* ---- system ---------------------------------------------------------- */

typedef struct paoi_system paoi_system;

/* parameter is the rate for exponential service and the value for deterministic */
PAOI_API paoi_status paoi_system_create(int n, double b, paoi_service_kind kind, double parameter,
                                        uint64_t seed, paoi_system** out);
PAOI_API void paoi_system_free(paoi_system* sys);
PAOI_API paoi_status paoi_log_mgf(const paoi_system* sys, double theta, double* out);

/* ---- simulation ------------------------------------------------------ */

typedef struct paoi_simulation paoi_simulation;

PAOI_API paoi_status paoi_simulate(const paoi_system* sys, const double* weights, size_t n_weights,
                                   uint64_t target_samples, uint64_t warmup_updates,
                                   paoi_simulation** out);
PAOI_API void paoi_simulation_free(paoi_simulation* sim);
PAOI_API paoi_status paoi_simulation_samples(const paoi_simulation* sim, int source,
                                             const double** samples, size_t* count);
PAOI_API paoi_status paoi_simulation_lemma1_residual(const paoi_simulation* sim, double* out);
PAOI_API paoi_status paoi_estimate_violation(const double* samples, size_t count, double x,
                                             double* p_hat, double* ci_halfwidth);

/* ---- bounds ---------------------------------------------------------- */

PAOI_API paoi_status paoi_wallenius_pmf(const uint8_t* drawn, const double* weights, size_t n,
                                        paoi_pmf_mode mode, double* out);
/* union aggregation over every ell; theta_star may be NULL */
PAOI_API paoi_status paoi_long_bound(const paoi_system* sys, const double* weights, size_t n,
                                     int source, double x, paoi_pmf_mode mode, double* bound,
                                     double* theta_star);
PAOI_API paoi_status paoi_short_bound(const paoi_system* sys, double mu_i, double x,
                                      double* bound, double* theta_star, int* admissible);

/* ---- design ---------------------------------------------------------- */

typedef enum paoi_design_kind { PAOI_DESIGN_LONG = 0, PAOI_DESIGN_SHORT = 1 } paoi_design_kind;

/* weights_out has n entries; *feasible is 0 when no grid weights certify */
PAOI_API paoi_status paoi_design(const paoi_system* sys, paoi_design_kind kind, const double* x,
                                 const double* eps, size_t n, double delta, double* weights_out,
                                 int* feasible);

/* ---- experiments ----------------------------------------------------- */

typedef struct paoi_experiment paoi_experiment;

PAOI_API paoi_status paoi_experiment_load(const char* path, paoi_experiment** out);
PAOI_API paoi_status paoi_experiment_parse(const char* json, paoi_experiment** out);
PAOI_API void paoi_experiment_free(paoi_experiment* exp);
PAOI_API paoi_status paoi_experiment_set_seed(paoi_experiment* exp, uint64_t seed);
PAOI_API paoi_status paoi_experiment_set_samples(paoi_experiment* exp, uint64_t samples);
PAOI_API paoi_status paoi_experiment_set_workers(paoi_experiment* exp, int workers);
PAOI_API paoi_status paoi_experiment_set_pmf(paoi_experiment* exp, paoi_pmf_mode mode);

typedef enum paoi_command {
  PAOI_CMD_SIMULATE = 0,
  PAOI_CMD_BOUND = 1,
  PAOI_CMD_DESIGN_L = 2,
  PAOI_CMD_DESIGN_S = 3,
  PAOI_CMD_OPT_SEARCH = 4,
  PAOI_CMD_REGION_SWEEP = 5,
  PAOI_CMD_DECAY = 6,
  PAOI_CMD_VALIDATE = 7
} paoi_command;

typedef struct paoi_run_result {
  /* 1 when a design came back infeasible or a validation check failed */
  int negative;
  /* rows written to the output table */
  size_t rows;
} paoi_run_result;

/* Runs one subcommand and writes its table (plus manifest) to out_path, or
   to stdout when out_path is NULL. */
PAOI_API paoi_status paoi_experiment_run(const paoi_experiment* exp, paoi_command command,
                                         const char* out_path, paoi_run_result* result);
/* Summary text of the last run on this thread (design reports, check lines). */
PAOI_API const char* paoi_last_summary(void);

#ifdef __cplusplus
}
#endif

#endif
