/*
 * C interface to the fast-charging station simulator.
 *
 * Objects are opaque handles owned by the caller and released with the
 * matching *_free function. Every fallible call returns an fcs_status; on
 * failure a description is available from fcs_last_error() on the same
 * thread until the next call into the library.
 */
#ifndef FCS_FCS_H
#define FCS_FCS_H

#include <stddef.h>

#if defined(_WIN32)
#if defined(FCS_BUILDING_LIBRARY)
#define FCS_API __declspec(dllexport)
#else
#define FCS_API __declspec(dllimport)
#endif
#else
#define FCS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fcs_status {
  FCS_OK = 0,
  FCS_ERR_INVALID_ARGUMENT = 1, /* null handle, bad name or value */
  FCS_ERR_CONFIG = 2,           /* scenario failed to parse or validate */
  FCS_ERR_IO = 3,               /* file could not be read or written */
  FCS_ERR_RUNTIME = 4           /* solver or simulation failure */
} fcs_status;

typedef enum fcs_mode { FCS_MODE_STANDALONE = 0, FCS_MODE_GRID = 1 } fcs_mode;

typedef struct fcs_scenario fcs_scenario;
typedef struct fcs_result fcs_result;

FCS_API const char *fcs_version(void);
FCS_API const char *fcs_last_error(void);
FCS_API const char *fcs_status_string(fcs_status status);

/* ---- scenarios ---- */

FCS_API fcs_status fcs_scenario_load(const char *path, fcs_scenario **out);
/* base_dir resolves relative PV CSV paths; may be NULL. */
FCS_API fcs_status fcs_scenario_parse(const char *text, const char *base_dir, fcs_scenario **out);
FCS_API fcs_status fcs_scenario_canonical(fcs_scenario **out);
FCS_API fcs_status fcs_scenario_clone(const fcs_scenario *s, fcs_scenario **out);
FCS_API void fcs_scenario_free(fcs_scenario *s);

FCS_API fcs_status fcs_scenario_save(const fcs_scenario *s, const char *path);
FCS_API fcs_status fcs_scenario_set_mode(fcs_scenario *s, fcs_mode mode);
FCS_API fcs_status fcs_scenario_get_mode(const fcs_scenario *s, fcs_mode *out);
/* name: alpha, beta, gamma, delta, e, y0 */
FCS_API fcs_status fcs_scenario_set_param(fcs_scenario *s, const char *name, double value);
FCS_API fcs_status fcs_scenario_get_param(const fcs_scenario *s, const char *name, double *out);
FCS_API fcs_status fcs_scenario_set_seed(fcs_scenario *s, unsigned long long seed);

/* Number of validation errors (0 = valid); messages via fcs_scenario_error. */
FCS_API size_t fcs_scenario_validate(const fcs_scenario *s);
FCS_API const char *fcs_scenario_error(const fcs_scenario *s, size_t index);

/* ---- simulation ---- */

FCS_API fcs_status fcs_simulate(const fcs_scenario *s, fcs_result **out);
/* Runs n scenarios concurrently; out[i] corresponds to scenarios[i]. On
 * failure no results are returned. */
FCS_API fcs_status fcs_simulate_batch(const fcs_scenario *const *scenarios, size_t n,
                                      fcs_result **out);
FCS_API void fcs_result_free(fcs_result *r);

FCS_API size_t fcs_result_rows(const fcs_result *r);
FCS_API size_t fcs_result_sessions(const fcs_result *r);
FCS_API const char *fcs_result_session_id(const fcs_result *r, size_t session);

typedef struct fcs_row {
  double t_s;
  double y_kwh;
  double p_pv_kw;
  double p_s_kw;
  double p_g_kw;
  double p_total_kw;
  double ref_total_kw;
  double kkt_residual;
  int fallback;
} fcs_row;

FCS_API fcs_status fcs_result_row(const fcs_result *r, size_t row, fcs_row *out);
/* Per-session reference, delivered power and state of charge at a row. */
FCS_API fcs_status fcs_result_session(const fcs_result *r, size_t row, size_t session,
                                      double *ref_kw, double *p_kw, double *x_kwh);
FCS_API fcs_status fcs_result_write(const fcs_result *r, const char *out_dir);

/* ---- setpoint allocation ---- */

/* Budget split of clamped references p_raw[n] under weights w[n] (> 0):
 * minimizes 1/2 sum w (p - p_raw)^2 s.t. sum p <= budget, 0 <= p <= p_raw. */
FCS_API fcs_status fcs_allocate_setpoints(const double *p_raw, const double *w, size_t n,
                                          double budget_kw, double *p_out, double *lambda_out);

#ifdef __cplusplus
}
#endif

#endif /* FCS_FCS_H */
