/* C interface to the linear random field deviation toolkit.
 *
 * All objects are opaque handles created and released through these
 * functions. Every call returns an lrf_status; on any nonzero status the
 * thread-local message from lrf_last_error() describes the failure. Handle
 * outputs are only valid when the call returned LRF_OK.
 */
#ifndef LRF_CAPI_H
#define LRF_CAPI_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lrf_status {
  LRF_OK = 0,
  LRF_ERR_INVALID_ARGUMENT = 1,
  LRF_ERR_DEGENERATE_FIELD = 2,
  LRF_ERR_WINDOW_OVERFLOW = 3,
  LRF_ERR_NONINTEGRABLE_MOMENT = 4,
  LRF_ERR_INVALID_REGIME = 5,
  LRF_ERR_TOO_MANY_ATOMS = 6,
  LRF_ERR_NEGATIVE_WEIGHT = 7,
  LRF_ERR_EMPTY_KERNEL_SUPPORT = 8,
  LRF_ERR_UNSUPPORTED_MODEL = 9,
  LRF_ERR_CONFIG = 10,
  LRF_ERR_IO = 11,
  LRF_ERR_INTERNAL = 12
} lrf_status;

typedef struct lrf_field lrf_field;
typedef struct lrf_region lrf_region;
typedef struct lrf_table lrf_table;
typedef struct lrf_innovation lrf_innovation;

const char* lrf_version(void);
/* Message for the most recent failing call on this thread. */
const char* lrf_last_error(void);

/* --- construction (JSON specs use the experiment-config vocabulary) ----- */

lrf_status lrf_field_create_json(const char* json_spec, lrf_field** out);
void lrf_field_free(lrf_field* field);

lrf_status lrf_region_create_square(int n, lrf_region** out);
lrf_status lrf_region_create_json(const char* json_spec, lrf_region** out);
void lrf_region_free(lrf_region* region);

lrf_status lrf_innovation_create_json(const char* json_spec,
                                      lrf_innovation** out);
void lrf_innovation_free(lrf_innovation* innovation);

/* --- weight tables ------------------------------------------------------ */

lrf_status lrf_build_weights(const lrf_field* field, const lrf_region* region,
                             double epsilon, int64_t max_window_cells,
                             lrf_table** out);
void lrf_table_free(lrf_table* table);

lrf_status lrf_table_sigma2(const lrf_table* table, double* out);
lrf_status lrf_table_truncation_epsilon(const lrf_table* table, double* out);
/* window bounds as [-mr, mr] x [-ms, ms] */
lrf_status lrf_table_window(const lrf_table* table, int* mr, int* ms);
lrf_status lrf_table_value(const lrf_table* table, int r, int s, double* out);
lrf_status lrf_table_export_csv(const lrf_table* table, const char* path);
lrf_status lrf_table_export_binary(const lrf_table* table, const char* path);

/* D_t, U_t, and rho² = max b² / σ² for the given exponents. */
lrf_status lrf_aggregates(const lrf_table* table, const double* exponents,
                          size_t n_exponents, double* d_out, double* u_out,
                          double* rho2_out);

/* --- innovations -------------------------------------------------------- */

lrf_status lrf_innovation_survival(const lrf_innovation* innovation, double x,
                                   double* out);
lrf_status lrf_innovation_truncated_moment(const lrf_innovation* innovation,
                                           double order, double lower,
                                           double upper, double* out);
lrf_status lrf_innovation_sample(const lrf_innovation* innovation,
                                 uint64_t seed, uint64_t stream, int64_t count,
                                 double* out);

/* --- Monte Carlo -------------------------------------------------------- */

/* For each threshold (σ units, ascending): p_hat and its binomial standard
 * error. Deterministic in (seed); independent of worker count. */
lrf_status lrf_simulate_tail(const lrf_table* table,
                             const lrf_innovation* innovation,
                             const double* thresholds_sigma,
                             size_t n_thresholds, int64_t n_samples,
                             uint64_t seed, int two_sided, int workers,
                             double* p_hat_out, double* std_err_out);

lrf_status lrf_enumerate_tail(const lrf_table* table,
                              const lrf_innovation* innovation,
                              double threshold_abs, double* out);

/* --- closed-form predictors --------------------------------------------- */

double lrf_normal_cdf(double x);
lrf_status lrf_normal_tail_bounds(double x, double* lower, double* upper);

lrf_status lrf_moderate_prediction(const lrf_table* table, double x_sigma,
                                   double p, double* value, int* moderate_ok);
lrf_status lrf_large_prediction(const lrf_table* table,
                                const lrf_innovation* innovation, double x_abs,
                                double ct_margin, double* value,
                                double* heavy_power_form, int* large_ok);
lrf_status lrf_uniform_prediction(const lrf_table* table,
                                  const lrf_innovation* innovation,
                                  double x_sigma, double p, double ct_margin,
                                  double* value, double* gaussian_part,
                                  double* heavy_part, int* moderate_ok,
                                  int* large_ok);
lrf_status lrf_validity_ranges(const lrf_table* table, double p, double t,
                               double ct_margin, double* x_moderate_max,
                               double* x_large_min);
lrf_status lrf_fuk_nagaev_bound(const lrf_table* table,
                                const lrf_innovation* innovation, double x_abs,
                                double y, double m, double* out);

/* --- Davis-Gut ---------------------------------------------------------- */

/* weight_kind: 0 = one, 1 = log_pow(r), 2 = log */
lrf_status lrf_psi(int weight_kind, double r, double c, double t, double* out);
lrf_status lrf_psi_first_exceed(int weight_kind, double r, double c,
                                int64_t* out);
lrf_status lrf_davis_gut_converges(int corollary /*1,2,3*/, double epsilon,
                                   double r, double b, int* out);

/* --- experiment runner --------------------------------------------------- */

/* Parses the JSON config text, runs the requested mode, and writes the
 * report files into out_dir. mode_override may be NULL or empty; a seed
 * override < 0 keeps the config seed; workers <= 0 uses LRF_WORKERS or 1.
 * Returns LRF_OK on success; LRF_ERR_CONFIG for invalid configs; the
 * verification-failed outcome is reported through verify_failed. */
lrf_status lrf_run_experiment(const char* config_json,
                              const char* mode_override, const char* out_dir,
                              int64_t seed_override, int workers,
                              int* verify_failed);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* LRF_CAPI_H */
