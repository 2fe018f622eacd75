//! Exercises the C surface the way a foreign caller would: raw pointers,
//! nul-terminated strings, explicit ownership, and status-code error
//! handling.

use std::ffi::{CStr, CString};
use std::ptr;

use fieldguard_ffi::{
    fg_config_free, fg_config_new, fg_config_set, fg_last_error, fg_simulate, fg_train,
    fg_version, FgConfig, FgMetrics, FgStatus, FgTrainingSummary,
};

fn last_error() -> String {
    unsafe { CStr::from_ptr(fg_last_error()) }
        .to_str()
        .expect("error message is UTF-8")
        .to_string()
}

/// A loaded handle for the given preset plus overrides, or the failure
/// status.
fn config(source: &str, sets: &[&str]) -> Result<*mut FgConfig, FgStatus> {
    let source = CString::new(source).unwrap();
    let mut handle: *mut FgConfig = ptr::null_mut();
    let status = unsafe { fg_config_new(source.as_ptr(), &mut handle) };
    if status != FgStatus::Ok {
        return Err(status);
    }
    for set in sets {
        let set = CString::new(*set).unwrap();
        let status = unsafe { fg_config_set(handle, set.as_ptr()) };
        if status != FgStatus::Ok {
            unsafe { fg_config_free(handle) };
            return Err(status);
        }
    }
    Ok(handle)
}

#[test]
fn version_is_a_static_semver_string() {
    let version = unsafe { CStr::from_ptr(fg_version()) }.to_str().unwrap();
    assert_eq!(version.split('.').count(), 3, "unexpected version {version}");
}

#[test]
fn unknown_source_reports_a_config_error() {
    let err = config("no-such-preset", &[]).unwrap_err();
    assert_eq!(err, FgStatus::ConfigError);
    let message = last_error();
    assert!(
        message.contains("no-such-preset"),
        "message should name the bad source: {message}"
    );
}

#[test]
fn null_arguments_are_rejected_not_dereferenced() {
    let mut handle: *mut FgConfig = ptr::null_mut();
    assert_eq!(
        unsafe { fg_config_new(ptr::null(), &mut handle) },
        FgStatus::NullArgument
    );
    let source = CString::new("default").unwrap();
    assert_eq!(
        unsafe { fg_config_new(source.as_ptr(), ptr::null_mut()) },
        FgStatus::NullArgument
    );
    let mut metrics = FgMetrics {
        damage_rate: 0.0,
        survived_drones: 0,
        n_drones: 0,
        mean_predicted_waiting: 0.0,
    };
    assert_eq!(
        unsafe { fg_simulate(ptr::null(), 1, &mut metrics) },
        FgStatus::NullArgument
    );
    unsafe { fg_config_free(ptr::null_mut()) };
}

#[test]
fn rejected_override_leaves_the_config_usable() {
    let handle = config("default", &[]).unwrap();
    let bad = CString::new("world.no_such_knob=1").unwrap();
    assert_eq!(
        unsafe { fg_config_set(handle, bad.as_ptr()) },
        FgStatus::ConfigError
    );
    assert!(!last_error().is_empty());

    // The handle still simulates, and the failed override left no trace.
    let good = CString::new("world.run_length=300").unwrap();
    assert_eq!(unsafe { fg_config_set(handle, good.as_ptr()) }, FgStatus::Ok);
    let mut metrics = FgMetrics {
        damage_rate: -1.0,
        survived_drones: 0,
        n_drones: 0,
        mean_predicted_waiting: 0.0,
    };
    assert_eq!(unsafe { fg_simulate(handle, 1, &mut metrics) }, FgStatus::Ok);
    assert_eq!(last_error(), "");
    unsafe { fg_config_free(handle) };
}

#[test]
fn simulation_is_deterministic_and_metrics_are_sane() {
    let handle = config("default", &["world.run_length=600"]).unwrap();
    let mut runs = Vec::new();
    for _ in 0..2 {
        let mut metrics = FgMetrics {
            damage_rate: -1.0,
            survived_drones: 0,
            n_drones: 0,
            mean_predicted_waiting: 0.0,
        };
        assert_eq!(unsafe { fg_simulate(handle, 7, &mut metrics) }, FgStatus::Ok);
        runs.push(metrics);
    }
    unsafe { fg_config_free(handle) };
    assert_eq!(runs[0], runs[1], "same seed must reproduce the same metrics");
    let m = &runs[0];
    assert!((0.0..=1.0).contains(&m.damage_rate));
    assert_eq!(m.n_drones, 12);
    assert!(m.survived_drones <= m.n_drones);
}

#[test]
fn training_returns_the_selected_iteration_summary() {
    let handle = config(
        "charging",
        &[
            "experiment.n_iterations=2",
            "experiment.runs_per_iteration=1",
            "world.run_length=720",
        ],
    )
    .unwrap();
    let mut summary = FgTrainingSummary {
        selected_iteration: u64::MAX,
        mean_damage: -1.0,
        mean_survived: -1.0,
        estimator_mse: -1.0,
    };
    assert_eq!(unsafe { fg_train(handle, 1, &mut summary) }, FgStatus::Ok);
    unsafe { fg_config_free(handle) };
    assert!(summary.selected_iteration < 2);
    assert!((0.0..=1.0).contains(&summary.mean_damage));
    assert!((0.0..=12.0).contains(&summary.mean_survived));
}
