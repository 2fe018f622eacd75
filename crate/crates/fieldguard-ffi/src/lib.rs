//! C ABI for the crop-protection drone simulator.
//!
//! The surface is deliberately small: load a configuration (a preset name or
//! a TOML file path), apply `key.path=value` overrides, then run a single
//! simulation or the full iterative training loop and read back the summary
//! metrics.  All functions are panic-safe; failures return an [`FgStatus`]
//! and leave a human-readable message retrievable via [`fg_last_error`].
//!
//! Ownership rules:
//! * [`fg_config_new`] allocates; every successful call must be paired with
//!   [`fg_config_free`].
//! * Strings returned by [`fg_version`] and [`fg_last_error`] are borrowed:
//!   the former is static, the latter is owned by the calling thread and
//!   valid until that thread's next call into this library.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use fieldguard::harness::{iterative_training, ExperimentConfig, HarnessError};
use fieldguard::world::run_simulation;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FgStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The configuration could not be loaded, overridden or validated.
    ConfigError = 3,
    /// The simulation or training run itself failed.
    RuntimeError = 4,
}

/// An experiment configuration under construction.
///
/// Overrides are replayed on top of the original source on every
/// [`fg_config_set`], so a rejected override leaves the previous state
/// untouched.
pub struct FgConfig {
    source: String,
    sets: Vec<String>,
    cfg: ExperimentConfig,
}

/// Utility metrics of one simulation run.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FgMetrics {
    /// Mean crop damage over the run, in `[0, 1]`.
    pub damage_rate: f64,
    /// Drones still alive at the end of the run.
    pub survived_drones: u64,
    /// Fleet size the run started with.
    pub n_drones: u64,
    /// Mean waiting-time forecast queried at enqueue decisions; NaN when the
    /// run never enqueued a drone.
    pub mean_predicted_waiting: f64,
}

/// Outcome of the iterative simulate-train loop.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FgTrainingSummary {
    /// Iteration whose estimator version was selected.
    pub selected_iteration: u64,
    /// Seed-run mean damage of the selected iteration.
    pub mean_damage: f64,
    /// Seed-run mean surviving drones of the selected iteration.
    pub mean_survived: f64,
    /// Held-out mean squared error of the primary estimator in the selected
    /// iteration; NaN when nothing was evaluated.
    pub estimator_mse: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).expect("nul bytes stripped");
    });
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::default();
    });
}

fn config_failure(err: &HarnessError) -> FgStatus {
    set_last_error(&err.to_string());
    match err {
        HarnessError::Config(_) => FgStatus::ConfigError,
        _ => FgStatus::RuntimeError,
    }
}

/// Run `body` with panics converted to [`FgStatus::RuntimeError`] so that no
/// unwinding ever crosses the C boundary.
fn guarded(body: impl FnOnce() -> FgStatus) -> FgStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_last_error("internal panic");
            FgStatus::RuntimeError
        }
    }
}

/// # Safety
/// `ptr` must be null or a valid nul-terminated C string.
unsafe fn utf8_arg<'a>(ptr: *const c_char) -> Result<&'a str, FgStatus> {
    if ptr.is_null() {
        set_last_error("null string argument");
        return Err(FgStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_last_error("string argument is not valid UTF-8");
        FgStatus::InvalidUtf8
    })
}

/// Version of the underlying crate as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn fg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message describing the calling thread's most recent failure, or an empty
/// string after a success.  The pointer stays valid until this thread's next
/// call into the library.
#[no_mangle]
pub extern "C" fn fg_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Load a configuration from a preset name (`default`, `charging`,
/// `protection`) or a TOML file path and store a handle in `*out`.
///
/// # Safety
/// `source` must be a valid nul-terminated C string and `out` a valid
/// pointer; on `FG_STATUS_OK` the caller owns the handle and must release it
/// with [`fg_config_free`].
#[no_mangle]
pub unsafe extern "C" fn fg_config_new(
    source: *const c_char,
    out: *mut *mut FgConfig,
) -> FgStatus {
    guarded(|| {
        if out.is_null() {
            set_last_error("null output argument");
            return FgStatus::NullArgument;
        }
        let source = match utf8_arg(source) {
            Ok(s) => s.to_string(),
            Err(status) => return status,
        };
        match ExperimentConfig::load(&source) {
            Ok(cfg) => {
                clear_last_error();
                *out = Box::into_raw(Box::new(FgConfig { source, sets: Vec::new(), cfg }));
                FgStatus::Ok
            }
            Err(e) => config_failure(&e),
        }
    })
}

/// Apply one `key.path=value` override, e.g. `world.n_drones=6` or
/// `experiment.seeds=[1,2,3]`.  On failure the configuration is unchanged.
///
/// # Safety
/// `config` must be a live handle from [`fg_config_new`] and `assignment` a
/// valid nul-terminated C string.
#[no_mangle]
pub unsafe extern "C" fn fg_config_set(
    config: *mut FgConfig,
    assignment: *const c_char,
) -> FgStatus {
    guarded(|| {
        let Some(config) = config.as_mut() else {
            set_last_error("null config argument");
            return FgStatus::NullArgument;
        };
        let assignment = match utf8_arg(assignment) {
            Ok(s) => s.to_string(),
            Err(status) => return status,
        };
        config.sets.push(assignment);
        match ExperimentConfig::load_with_overrides(&config.source, &config.sets) {
            Ok(cfg) => {
                clear_last_error();
                config.cfg = cfg;
                FgStatus::Ok
            }
            Err(e) => {
                config.sets.pop();
                config_failure(&e)
            }
        }
    })
}

/// Release a configuration handle.  Accepts null.
///
/// # Safety
/// `config` must be null or a handle from [`fg_config_new`] that has not
/// been freed already.
#[no_mangle]
pub unsafe extern "C" fn fg_config_free(config: *mut FgConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Run one simulation under the configured scenario policy and write its
/// utility metrics to `*out`.
///
/// # Safety
/// `config` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fg_simulate(
    config: *const FgConfig,
    seed: u64,
    out: *mut FgMetrics,
) -> FgStatus {
    guarded(|| {
        let Some(config) = config.as_ref() else {
            set_last_error("null config argument");
            return FgStatus::NullArgument;
        };
        if out.is_null() {
            set_last_error("null output argument");
            return FgStatus::NullArgument;
        }
        if let Err(e) = config.cfg.validate() {
            return config_failure(&e);
        }
        let mut set = match config.cfg.build_estimator_set() {
            Ok(set) => set,
            Err(e) => return config_failure(&e),
        };
        let policy = match config.cfg.build_policy(&set) {
            Ok(policy) => policy,
            Err(e) => return config_failure(&e),
        };
        match run_simulation(&config.cfg.world, &policy, &mut set, seed) {
            Ok(result) => {
                clear_last_error();
                *out = FgMetrics {
                    damage_rate: result.damage_rate,
                    survived_drones: result.survived_drones as u64,
                    n_drones: result.n_drones as u64,
                    mean_predicted_waiting: result
                        .mean_predicted_waiting
                        .unwrap_or(f64::NAN),
                };
                FgStatus::Ok
            }
            Err(e) => {
                set_last_error(&e.to_string());
                FgStatus::RuntimeError
            }
        }
    })
}

/// Run the full iterative simulate-train loop from `seed` and write the
/// selected iteration's summary to `*out`.
///
/// # Safety
/// `config` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fg_train(
    config: *const FgConfig,
    seed: u64,
    out: *mut FgTrainingSummary,
) -> FgStatus {
    guarded(|| {
        let Some(config) = config.as_ref() else {
            set_last_error("null config argument");
            return FgStatus::NullArgument;
        };
        if out.is_null() {
            set_last_error("null output argument");
            return FgStatus::NullArgument;
        }
        match iterative_training(&config.cfg, seed) {
            Ok(outcome) => {
                let row = &outcome.rows[outcome.selected_iteration];
                clear_last_error();
                *out = FgTrainingSummary {
                    selected_iteration: outcome.selected_iteration as u64,
                    mean_damage: row.mean_damage,
                    mean_survived: row.mean_survived,
                    estimator_mse: row.estimator_mse,
                };
                FgStatus::Ok
            }
            Err(e) => config_failure(&e),
        }
    })
}
