#ifndef AUV_PATHFOLLOW_H
#define AUV_PATHFOLLOW_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result codes.
 */
typedef enum AuvStatus {
  AUV_STATUS_OK = 0,
  AUV_STATUS_NULL_ARGUMENT = 1,
  AUV_STATUS_INVALID_STRING = 2,
  /*
   Malformed, schema-violating or invalid scenario.
   */
  AUV_STATUS_CONFIG = 3,
  AUV_STATUS_IO = 4,
  /*
   The run stopped early; a result with the partial log is still
   returned.
   */
  AUV_STATUS_RUNTIME_ABORT = 5,
  AUV_STATUS_OUT_OF_RANGE = 6,
  AUV_STATUS_PANIC = 7,
} AuvStatus;

/*
 Per-row solver outcome.
 */
typedef enum AuvQpStatus {
  AUV_QP_STATUS_SOLVED = 0,
  AUV_QP_STATUS_INFEASIBLE = 1,
  AUV_QP_STATUS_MAX_ITER = 2,
  /*
   Final row logged when the destination is reached; no wrench applied.
   */
  AUV_QP_STATUS_TERMINAL = 3,
} AuvQpStatus;

typedef enum AuvLogFormat {
  AUV_LOG_FORMAT_CSV = 0,
  AUV_LOG_FORMAT_JSON = 1,
} AuvLogFormat;

/*
 Scenario configuration handle.
 */
typedef struct AuvScenario AuvScenario;

/*
 Log and metrics of one run.
 */
typedef struct AuvSimResult AuvSimResult;

/*
 One logged sample. Arrays follow the column order of the CSV log.
 */
typedef struct AuvLogRow {
  double t;
  double pose[6];
  double nu[6];
  double tau[6];
  double tau_w[3];
  double los_ref[6];
  size_t active_index;
  enum AuvQpStatus qp_status;
  size_t qp_iterations;
  double worst_case_cost;
} AuvLogRow;

/*
 Scalar run statistics. Per-waypoint values are available through
 [`auv_result_hit_time`] and [`auv_result_cross_track`].
 */
typedef struct AuvMetrics {
  double mean_surge;
  double surge_std;
  /*
   Degrees.
   */
  double mean_abs_roll;
  /*
   Degrees.
   */
  double max_abs_roll;
  double max_abs_tau;
  size_t waypoint_count;
  size_t waypoints_reached;
  bool completed;
} AuvMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static string.
 */
const char *auv_version(void);

/*
 Message of the most recent failing call on this thread, or `NULL`. The
 pointer stays valid until the next failing call on the same thread.
 */
const char *auv_last_error_message(void);

/*
 The built-in reference course.

 # Safety
 `out` must be NULL or valid for writes.
 */
enum AuvStatus auv_scenario_default(struct AuvScenario **out);

/*
 Parses and validates a scenario from JSON text.

 # Safety
 `json` must be NULL or a NUL-terminated string; `out` must be NULL or
 valid for writes.
 */
enum AuvStatus auv_scenario_from_json(const char *json, struct AuvScenario **out);

/*
 Loads and validates a scenario file.

 # Safety
 As for [`auv_scenario_from_json`].
 */
enum AuvStatus auv_scenario_load(const char *path, struct AuvScenario **out);

/*
 Serializes a scenario to JSON. Release the string with
 [`auv_string_free`].

 # Safety
 `scenario` must be NULL or a live handle; `out` must be NULL or valid for
 writes.
 */
enum AuvStatus auv_scenario_to_json(const struct AuvScenario *scenario, char **out);

/*
 # Safety
 `s` must be NULL or a string returned by this library.
 */
void auv_string_free(char *s);

/*
 # Safety
 `scenario` must be NULL or a live handle.
 */
enum AuvStatus auv_scenario_set_seed(struct AuvScenario *scenario, uint64_t seed);

/*
 Sets the circle-of-acceptance radius, m. Must be finite and positive.

 # Safety
 `scenario` must be NULL or a live handle.
 */
enum AuvStatus auv_scenario_set_rho_c(struct AuvScenario *scenario, double rho_c);

/*
 # Safety
 `scenario` must be NULL or a handle not yet freed.
 */
void auv_scenario_free(struct AuvScenario *scenario);

/*
 Runs the closed loop. On `AUV_STATUS_OK` or `AUV_STATUS_RUNTIME_ABORT`
 a result handle is written to `out`; after an abort it holds the rows
 logged before the failure.

 # Safety
 `scenario` must be NULL or a live handle; `out` must be NULL or valid for
 writes.
 */
enum AuvStatus auv_simulate(const struct AuvScenario *scenario, struct AuvSimResult **out);

/*
 # Safety
 `result` must be NULL or a live handle; `out` must be NULL or valid for
 writes.
 */
enum AuvStatus auv_result_row_count(const struct AuvSimResult *result, size_t *out);

/*
 Copies row `index` into `out`.

 # Safety
 `result` must be NULL or a live handle; `out` must be NULL or valid for
 writes.
 */
enum AuvStatus auv_result_row(const struct AuvSimResult *result,
                              size_t index,
                              struct AuvLogRow *out);

/*
 # Safety
 `result` must be NULL or a live handle; `out` must be NULL or valid for
 writes.
 */
enum AuvStatus auv_result_metrics(const struct AuvSimResult *result, struct AuvMetrics *out);

/*
 Time at which waypoint `index` was reached. `*reached` is false (and
 `*out` NaN) when it never was.

 # Safety
 `result` must be NULL or a live handle; `out` and `reached` must be NULL
 or valid for writes.
 */
enum AuvStatus auv_result_hit_time(const struct AuvSimResult *result,
                                   size_t index,
                                   double *out,
                                   bool *reached);

/*
 RMS distance to the line of segment `index`, m. `*present` is false when
 no samples fall in the segment.

 # Safety
 As for [`auv_result_hit_time`].
 */
enum AuvStatus auv_result_cross_track(const struct AuvSimResult *result,
                                      size_t index,
                                      double *out,
                                      bool *present);

/*
 Writes the log as CSV or JSON.

 # Safety
 `result` must be NULL or a live handle; `path` must be NULL or a
 NUL-terminated string.
 */
enum AuvStatus auv_result_write_log(const struct AuvSimResult *result,
                                    const char *path,
                                    enum AuvLogFormat format);

/*
 # Safety
 `result` must be NULL or a handle not yet freed.
 */
void auv_result_free(struct AuvSimResult *result);

/*
 One controller evaluation with the scenario's vehicle and tuning, using
 the measured velocity as the previous velocity. `pose`, `nu` and
 `reference` point to 6 doubles; `reference` is
 `[x_los y_los z_los phi theta psi]`. Writes the bounded wrench to
 `tau_out` (6 doubles) and, when `status_out` is not NULL, the solver
 outcome.

 # Safety
 All array pointers must be NULL or valid for 6 doubles; `scenario` must
 be NULL or a live handle.
 */
enum AuvStatus auv_mpc_step(const struct AuvScenario *scenario,
                            const double *pose,
                            const double *nu,
                            const double *reference,
                            double *tau_out,
                            enum AuvQpStatus *status_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AUV_PATHFOLLOW_H */
