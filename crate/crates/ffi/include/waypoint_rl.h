#ifndef WAYPOINT_RL_H
#define WAYPOINT_RL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum WrlStatus {
  WRL_STATUS_OK = 0,
  // A required pointer argument was null.
  WRL_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  WRL_STATUS_INVALID_UTF8 = 2,
  // The configuration JSON was malformed or violated a parameter range.
  WRL_STATUS_INVALID_CONFIG = 3,
  // An index, cell, action or numeric argument was out of range.
  WRL_STATUS_INVALID_ARGUMENT = 4,
  WRL_STATUS_IO = 5,
  // A file existed but could not be parsed.
  WRL_STATUS_PARSE = 6,
  // A checkpoint was written for a different configuration.
  WRL_STATUS_FINGERPRINT_MISMATCH = 7,
  // A maneuver failed to reach its waypoint before the plant timeout.
  WRL_STATUS_MANEUVER_TIMEOUT = 8,
  // The simulation produced a NaN or infinity.
  WRL_STATUS_NON_FINITE = 9,
  // The trainer has already run every configured episode.
  WRL_STATUS_FINISHED = 10,
  // The caller's output buffer is shorter than required.
  WRL_STATUS_BUFFER_TOO_SMALL = 11,
  // An internal panic was caught at the boundary.
  WRL_STATUS_PANIC = 12,
} WrlStatus;

// Opaque training session.
typedef struct WrlTrainer WrlTrainer;

// One row of the episode log.
typedef struct WrlEpisodeSummary {
  uint32_t episode;
  uint32_t steps;
  double total_reward;
  bool reached_goal;
  // Simulated flight time in seconds; zero without dynamics.
  double duration_s;
} WrlEpisodeSummary;

// Metrics of a step-response maneuver.
typedef struct WrlStepResponse {
  double overshoot_m;
  // Infinity when the vehicle never settles inside the radius.
  double settling_time_s;
  double final_error_m;
} WrlStepResponse;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *wrl_version(void);

// Static name of a status code, e.g. `"invalid_config"`.
const char *wrl_status_name(enum WrlStatus status);

// Message of the most recent failure on this thread, or null if none.
// Owned by the library; do not free.
const char *wrl_last_error(void);

// Creates a trainer at episode 1 from a JSON training config.
//
// # Safety
// `config_json` must be a NUL-terminated string; `out` must be writable.
enum WrlStatus wrl_trainer_new(const char *config_json, struct WrlTrainer **out);

// Restores a trainer from a checkpoint file written for the same config.
//
// # Safety
// String arguments must be NUL-terminated; `out` must be writable.
enum WrlStatus wrl_trainer_resume(const char *config_json,
                                  const char *checkpoint_path,
                                  struct WrlTrainer **out);

// Releases a trainer. Null is ignored.
//
// # Safety
// `trainer` must come from this library and not be used afterwards.
void wrl_trainer_free(struct WrlTrainer *trainer);

// Episode the next call to [`wrl_trainer_run_episode`] will run; one past
// the configured count once training is done. Returns 0 for null.
//
// # Safety
// `trainer` must be null or a live handle.
uint32_t wrl_trainer_next_episode(const struct WrlTrainer *trainer);

// Runs one episode. Returns `WRL_STATUS_FINISHED` once every episode is done.
// On `WRL_STATUS_MANEUVER_TIMEOUT` the episode is not counted and the table
// keeps the updates made before the failed maneuver.
//
// # Safety
// `trainer` must be a live handle; `out` must be null or writable.
enum WrlStatus wrl_trainer_run_episode(struct WrlTrainer *trainer, struct WrlEpisodeSummary *out);

// Reads `Q((x, y), action)`.
//
// # Safety
// `trainer` must be a live handle; `out` must be writable.
enum WrlStatus wrl_trainer_q_value(const struct WrlTrainer *trainer,
                                   uint32_t x,
                                   uint32_t y,
                                   uint32_t action,
                                   double *out);

// Length of the greedy path from `(x, y)` to the goal, or -1 if it does not
// reach the goal within the per-episode step cap.
//
// # Safety
// `trainer` must be a live handle; `out` must be writable.
enum WrlStatus wrl_trainer_greedy_path_len(const struct WrlTrainer *trainer,
                                           uint32_t x,
                                           uint32_t y,
                                           int64_t *out);

// Writes a checkpoint JSON that [`wrl_trainer_resume`] accepts.
//
// # Safety
// `trainer` must be a live handle; `path` must be NUL-terminated.
enum WrlStatus wrl_trainer_save_checkpoint(const struct WrlTrainer *trainer, const char *path);

// Writes the Q-table as CSV.
//
// # Safety
// `trainer` must be a live handle; `path` must be NUL-terminated.
enum WrlStatus wrl_trainer_save_qtable(const struct WrlTrainer *trainer, const char *path);

// Solves for the optimal Q-table of the config's grid. Values are written
// row-major, four actions per cell, cells ordered by `(y - 1) * width + (x - 1)`.
// `required` always receives the number of values; if `len` is smaller
// nothing else is written and `WRL_STATUS_BUFFER_TOO_SMALL` is returned.
//
// # Safety
// `config_json` must be NUL-terminated; `values` must hold `len` doubles
// (it may be null when `len` is 0); `required` must be writable.
enum WrlStatus wrl_value_iteration(const char *config_json,
                                   double gamma,
                                   double tol,
                                   double *values,
                                   size_t len,
                                   size_t *required);

// Flies a step of `step_m` meters along +x from rest, holding the setpoint
// for `duration_s`, and reports overshoot, settling time inside `radius_m`
// and the final error. Plant parameters come from `config_json` when it is
// non-null, otherwise the defaults are used.
//
// # Safety
// `config_json` must be null or NUL-terminated; `out` must be writable.
enum WrlStatus wrl_step_response(const char *config_json,
                                 double kp,
                                 double ki,
                                 double kd,
                                 double step_m,
                                 double duration_s,
                                 double radius_m,
                                 struct WrlStepResponse *out);

// Trains the config with and without flight dynamics and reports whether
// both runs made identical decisions and ended with identical tables.
//
// # Safety
// `config_json` must be NUL-terminated; `out` must be writable.
enum WrlStatus wrl_equivalence_check(const char *config_json, bool *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WAYPOINT_RL_H */
