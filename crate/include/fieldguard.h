/* C interface of the fieldguard crop-protection drone simulator. */

#ifndef FIELDGUARD_H
#define FIELDGUARD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum FgStatus {
  // The call succeeded.
  FG_STATUS_OK = 0,
  // A required pointer argument was null.
  FG_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  FG_STATUS_INVALID_UTF8 = 2,
  // The configuration could not be loaded, overridden or validated.
  FG_STATUS_CONFIG_ERROR = 3,
  // The simulation or training run itself failed.
  FG_STATUS_RUNTIME_ERROR = 4,
} FgStatus;

// An experiment configuration under construction.
//
// Overrides are replayed on top of the original source on every
// [`fg_config_set`], so a rejected override leaves the previous state
// untouched.
typedef struct FgConfig FgConfig;

// Utility metrics of one simulation run.
typedef struct FgMetrics {
  // Mean crop damage over the run, in `[0, 1]`.
  double damage_rate;
  // Drones still alive at the end of the run.
  uint64_t survived_drones;
  // Fleet size the run started with.
  uint64_t n_drones;
  // Mean waiting-time forecast queried at enqueue decisions; NaN when the
  // run never enqueued a drone.
  double mean_predicted_waiting;
} FgMetrics;

// Outcome of the iterative simulate-train loop.
typedef struct FgTrainingSummary {
  // Iteration whose estimator version was selected.
  uint64_t selected_iteration;
  // Seed-run mean damage of the selected iteration.
  double mean_damage;
  // Seed-run mean surviving drones of the selected iteration.
  double mean_survived;
  // Held-out mean squared error of the primary estimator in the selected
  // iteration; NaN when nothing was evaluated.
  double estimator_mse;
} FgTrainingSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Version of the underlying crate as a static nul-terminated string.
const char *fg_version(void);

// Message describing the calling thread's most recent failure, or an empty
// string after a success.  The pointer stays valid until this thread's next
// call into the library.
const char *fg_last_error(void);

// Load a configuration from a preset name (`default`, `charging`,
// `protection`) or a TOML file path and store a handle in `*out`.
//
// # Safety
// `source` must be a valid nul-terminated C string and `out` a valid
// pointer; on `FG_STATUS_OK` the caller owns the handle and must release it
// with [`fg_config_free`].
enum FgStatus fg_config_new(const char *source, struct FgConfig **out);

// Apply one `key.path=value` override, e.g. `world.n_drones=6` or
// `experiment.seeds=[1,2,3]`.  On failure the configuration is unchanged.
//
// # Safety
// `config` must be a live handle from [`fg_config_new`] and `assignment` a
// valid nul-terminated C string.
enum FgStatus fg_config_set(struct FgConfig *config, const char *assignment);

// Release a configuration handle.  Accepts null.
//
// # Safety
// `config` must be null or a handle from [`fg_config_new`] that has not
// been freed already.
void fg_config_free(struct FgConfig *config);

// Run one simulation under the configured scenario policy and write its
// utility metrics to `*out`.
//
// # Safety
// `config` must be a live handle and `out` a valid pointer.
enum FgStatus fg_simulate(const struct FgConfig *config, uint64_t seed, struct FgMetrics *out);

// Run the full iterative simulate-train loop from `seed` and write the
// selected iteration's summary to `*out`.
//
// # Safety
// `config` must be a live handle and `out` a valid pointer.
enum FgStatus fg_train(const struct FgConfig *config, uint64_t seed, struct FgTrainingSummary *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FIELDGUARD_H */
