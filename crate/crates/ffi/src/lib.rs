//! C ABI for the path-following simulator.
//!
//! Conventions:
//! - Every fallible function returns an [`AuvStatus`]. On failure a message
//!   is stored for the calling thread and can be read with
//!   [`auv_last_error_message`].
//! - Handles are opaque and owned by the caller once returned; release them
//!   with the matching `*_free` function. Freeing `NULL` is a no-op.
//! - Strings are NUL-terminated UTF-8.
//! - No Rust panic crosses the boundary; one is reported as
//!   `AUV_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use auv_pathfollow::controller::mpc_step;
use auv_pathfollow::guidance::LosReference;
use auv_pathfollow::harness::{
    compute_metrics, run_simulation, write_log, HarnessError, LogFormat, LogRow, Metrics,
    RowStatus, ScenarioConfig, SimLog,
};
use auv_pathfollow::vehicle::{Pose, VehicleState, Velocity};
use auv_pathfollow::SolveStatus;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuvStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidString = 2,
    /// Malformed, schema-violating or invalid scenario.
    Config = 3,
    Io = 4,
    /// The run stopped early; a result with the partial log is still
    /// returned.
    RuntimeAbort = 5,
    OutOfRange = 6,
    Panic = 7,
}

/// Per-row solver outcome.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuvQpStatus {
    Solved = 0,
    Infeasible = 1,
    MaxIter = 2,
    /// Final row logged when the destination is reached; no wrench applied.
    Terminal = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuvLogFormat {
    Csv = 0,
    Json = 1,
}

/// One logged sample. Arrays follow the column order of the CSV log.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuvLogRow {
    pub t: f64,
    pub pose: [f64; 6],
    pub nu: [f64; 6],
    pub tau: [f64; 6],
    pub tau_w: [f64; 3],
    pub los_ref: [f64; 6],
    pub active_index: usize,
    pub qp_status: AuvQpStatus,
    pub qp_iterations: usize,
    pub worst_case_cost: f64,
}

/// Scalar run statistics. Per-waypoint values are available through
/// [`auv_result_hit_time`] and [`auv_result_cross_track`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuvMetrics {
    pub mean_surge: f64,
    pub surge_std: f64,
    /// Degrees.
    pub mean_abs_roll: f64,
    /// Degrees.
    pub max_abs_roll: f64,
    pub max_abs_tau: f64,
    pub waypoint_count: usize,
    pub waypoints_reached: usize,
    pub completed: bool,
}

/// Scenario configuration handle.
pub struct AuvScenario {
    config: ScenarioConfig,
}

/// Log and metrics of one run.
pub struct AuvSimResult {
    log: SimLog,
    metrics: Metrics,
}

struct Failure {
    status: AuvStatus,
    message: String,
}

impl Failure {
    fn new(status: AuvStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).expect("NUL bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<AuvStatus, Failure>) -> AuvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(failure)) => {
            set_last_error(&failure.message);
            failure.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("internal panic: {msg}"));
            AuvStatus::Panic
        }
    }
}

fn non_null<'a, T>(ptr: *const T, name: &str) -> Result<&'a T, Failure> {
    // SAFETY: the caller guarantees a non-null pointer refers to a live value.
    unsafe { ptr.as_ref() }
        .ok_or_else(|| Failure::new(AuvStatus::NullArgument, format!("{name} is NULL")))
}

fn non_null_mut<'a, T>(ptr: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    // SAFETY: as for `non_null`, with exclusive access.
    unsafe { ptr.as_mut() }
        .ok_or_else(|| Failure::new(AuvStatus::NullArgument, format!("{name} is NULL")))
}

fn read_str<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(Failure::new(
            AuvStatus::NullArgument,
            format!("{name} is NULL"),
        ));
    }
    // SAFETY: non-null and NUL-terminated per the API contract.
    unsafe { CStr::from_ptr(ptr) }.to_str().map_err(|e| {
        Failure::new(
            AuvStatus::InvalidString,
            format!("{name} is not UTF-8: {e}"),
        )
    })
}

fn read_array<'a>(ptr: *const f64, name: &str) -> Result<&'a [f64; 6], Failure> {
    non_null(ptr.cast::<[f64; 6]>(), name)
}

fn config_failure(e: impl std::fmt::Display) -> Failure {
    Failure::new(AuvStatus::Config, e.to_string())
}

fn emit_scenario(out: *mut *mut AuvScenario, config: ScenarioConfig) -> Result<AuvStatus, Failure> {
    let out = non_null_mut(out, "out")?;
    config.validate().map_err(config_failure)?;
    *out = Box::into_raw(Box::new(AuvScenario { config }));
    Ok(AuvStatus::Ok)
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn auv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the most recent failing call on this thread, or `NULL`. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn auv_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// The built-in reference course.
///
/// # Safety
/// `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn auv_scenario_default(out: *mut *mut AuvScenario) -> AuvStatus {
    guard(|| emit_scenario(out, ScenarioConfig::reference()))
}

/// Parses and validates a scenario from JSON text.
///
/// # Safety
/// `json` must be NULL or a NUL-terminated string; `out` must be NULL or
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn auv_scenario_from_json(
    json: *const c_char,
    out: *mut *mut AuvScenario,
) -> AuvStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        emit_scenario(
            out,
            ScenarioConfig::from_json(text).map_err(config_failure)?,
        )
    })
}

/// Loads and validates a scenario file.
///
/// # Safety
/// As for [`auv_scenario_from_json`].
#[no_mangle]
pub unsafe extern "C" fn auv_scenario_load(
    path: *const c_char,
    out: *mut *mut AuvScenario,
) -> AuvStatus {
    guard(|| {
        let path = read_str(path, "path")?;
        match ScenarioConfig::load(path) {
            Ok(config) => emit_scenario(out, config),
            Err(e @ auv_pathfollow::harness::ConfigError::Io { .. }) => {
                Err(Failure::new(AuvStatus::Io, e.to_string()))
            }
            Err(e) => Err(config_failure(e)),
        }
    })
}

/// Serializes a scenario to JSON. Release the string with
/// [`auv_string_free`].
///
/// # Safety
/// `scenario` must be NULL or a live handle; `out` must be NULL or valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn auv_scenario_to_json(
    scenario: *const AuvScenario,
    out: *mut *mut c_char,
) -> AuvStatus {
    guard(|| {
        let scenario = non_null(scenario, "scenario")?;
        let out = non_null_mut(out, "out")?;
        let json = CString::new(scenario.config.to_json()).expect("JSON has no NUL bytes");
        *out = json.into_raw();
        Ok(AuvStatus::Ok)
    })
}

/// # Safety
/// `s` must be NULL or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn auv_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: produced by `CString::into_raw` in this library.
        drop(unsafe { CString::from_raw(s) });
    }
}

/// # Safety
/// `scenario` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn auv_scenario_set_seed(scenario: *mut AuvScenario, seed: u64) -> AuvStatus {
    guard(|| {
        non_null_mut(scenario, "scenario")?.config.seed = seed;
        Ok(AuvStatus::Ok)
    })
}

/// Sets the circle-of-acceptance radius, m. Must be finite and positive.
///
/// # Safety
/// `scenario` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn auv_scenario_set_rho_c(
    scenario: *mut AuvScenario,
    rho_c: f64,
) -> AuvStatus {
    guard(|| {
        let scenario = non_null_mut(scenario, "scenario")?;
        if !(rho_c.is_finite() && rho_c > 0.0) {
            return Err(Failure::new(
                AuvStatus::OutOfRange,
                format!("rho_c must be positive, got {rho_c}"),
            ));
        }
        scenario.config.guidance.rho_c = rho_c;
        Ok(AuvStatus::Ok)
    })
}

/// # Safety
/// `scenario` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn auv_scenario_free(scenario: *mut AuvScenario) {
    if !scenario.is_null() {
        // SAFETY: produced by `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(scenario) });
    }
}

/// Runs the closed loop. On `AUV_STATUS_OK` or `AUV_STATUS_RUNTIME_ABORT`
/// a result handle is written to `out`; after an abort it holds the rows
/// logged before the failure.
///
/// # Safety
/// `scenario` must be NULL or a live handle; `out` must be NULL or valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn auv_simulate(
    scenario: *const AuvScenario,
    out: *mut *mut AuvSimResult,
) -> AuvStatus {
    guard(|| {
        let scenario = non_null(scenario, "scenario")?;
        let out = non_null_mut(out, "out")?;
        match run_simulation(&scenario.config) {
            Ok(res) => {
                *out = Box::into_raw(Box::new(AuvSimResult {
                    log: res.log,
                    metrics: res.metrics,
                }));
                Ok(AuvStatus::Ok)
            }
            Err(HarnessError::Aborted { time, reason, log }) => {
                let metrics = compute_metrics(&log, &scenario.config.plan());
                *out = Box::into_raw(Box::new(AuvSimResult { log: *log, metrics }));
                set_last_error(&format!("run aborted at t = {time} s: {reason}"));
                Ok(AuvStatus::RuntimeAbort)
            }
            Err(e) => Err(config_failure(e)),
        }
    })
}

/// # Safety
/// `result` must be NULL or a live handle; `out` must be NULL or valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn auv_result_row_count(
    result: *const AuvSimResult,
    out: *mut usize,
) -> AuvStatus {
    guard(|| {
        let result = non_null(result, "result")?;
        *non_null_mut(out, "out")? = result.log.len();
        Ok(AuvStatus::Ok)
    })
}

fn to_c_row(row: &LogRow) -> AuvLogRow {
    AuvLogRow {
        t: row.t,
        pose: row.pose,
        nu: row.nu,
        tau: row.tau,
        tau_w: row.tau_w,
        los_ref: row.los_ref,
        active_index: row.active_index,
        qp_status: match row.qp_status {
            RowStatus::Solved => AuvQpStatus::Solved,
            RowStatus::Infeasible => AuvQpStatus::Infeasible,
            RowStatus::MaxIter => AuvQpStatus::MaxIter,
            RowStatus::Terminal => AuvQpStatus::Terminal,
        },
        qp_iterations: row.qp_iterations,
        worst_case_cost: row.worst_case_cost,
    }
}

/// Copies row `index` into `out`.
///
/// # Safety
/// `result` must be NULL or a live handle; `out` must be NULL or valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn auv_result_row(
    result: *const AuvSimResult,
    index: usize,
    out: *mut AuvLogRow,
) -> AuvStatus {
    guard(|| {
        let result = non_null(result, "result")?;
        let out = non_null_mut(out, "out")?;
        let row = result.log.rows.get(index).ok_or_else(|| {
            Failure::new(
                AuvStatus::OutOfRange,
                format!("row {index} requested, log has {}", result.log.len()),
            )
        })?;
        *out = to_c_row(row);
        Ok(AuvStatus::Ok)
    })
}

/// # Safety
/// `result` must be NULL or a live handle; `out` must be NULL or valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn auv_result_metrics(
    result: *const AuvSimResult,
    out: *mut AuvMetrics,
) -> AuvStatus {
    guard(|| {
        let m = &non_null(result, "result")?.metrics;
        *non_null_mut(out, "out")? = AuvMetrics {
            mean_surge: m.mean_surge,
            surge_std: m.surge_std,
            mean_abs_roll: m.mean_abs_roll,
            max_abs_roll: m.max_abs_roll,
            max_abs_tau: m.max_abs_tau,
            waypoint_count: m.waypoint_hit_times.len(),
            waypoints_reached: m.waypoint_hit_times.iter().flatten().count(),
            completed: m.completed,
        };
        Ok(AuvStatus::Ok)
    })
}

fn per_waypoint(
    result: *const AuvSimResult,
    index: usize,
    out: *mut f64,
    present: *mut bool,
    pick: impl Fn(&Metrics) -> &Vec<Option<f64>>,
) -> Result<AuvStatus, Failure> {
    let values = pick(&non_null(result, "result")?.metrics);
    let out = non_null_mut(out, "out")?;
    let present = non_null_mut(present, "present")?;
    let value = values.get(index).ok_or_else(|| {
        Failure::new(
            AuvStatus::OutOfRange,
            format!("waypoint {index} requested, plan has {}", values.len()),
        )
    })?;
    *present = value.is_some();
    *out = value.unwrap_or(f64::NAN);
    Ok(AuvStatus::Ok)
}

/// Time at which waypoint `index` was reached. `*reached` is false (and
/// `*out` NaN) when it never was.
///
/// # Safety
/// `result` must be NULL or a live handle; `out` and `reached` must be NULL
/// or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn auv_result_hit_time(
    result: *const AuvSimResult,
    index: usize,
    out: *mut f64,
    reached: *mut bool,
) -> AuvStatus {
    guard(|| per_waypoint(result, index, out, reached, |m| &m.waypoint_hit_times))
}

/// RMS distance to the line of segment `index`, m. `*present` is false when
/// no samples fall in the segment.
///
/// # Safety
/// As for [`auv_result_hit_time`].
#[no_mangle]
pub unsafe extern "C" fn auv_result_cross_track(
    result: *const AuvSimResult,
    index: usize,
    out: *mut f64,
    present: *mut bool,
) -> AuvStatus {
    guard(|| per_waypoint(result, index, out, present, |m| &m.cross_track_rms))
}

/// Writes the log as CSV or JSON.
///
/// # Safety
/// `result` must be NULL or a live handle; `path` must be NULL or a
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn auv_result_write_log(
    result: *const AuvSimResult,
    path: *const c_char,
    format: AuvLogFormat,
) -> AuvStatus {
    guard(|| {
        let result = non_null(result, "result")?;
        let path = read_str(path, "path")?;
        let format = match format {
            AuvLogFormat::Csv => LogFormat::Csv,
            AuvLogFormat::Json => LogFormat::Json,
        };
        write_log(&result.log, Path::new(path), format)
            .map_err(|e| Failure::new(AuvStatus::Io, e.to_string()))?;
        Ok(AuvStatus::Ok)
    })
}

/// # Safety
/// `result` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn auv_result_free(result: *mut AuvSimResult) {
    if !result.is_null() {
        // SAFETY: produced by `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(result) });
    }
}

/// One controller evaluation with the scenario's vehicle and tuning, using
/// the measured velocity as the previous velocity. `pose`, `nu` and
/// `reference` point to 6 doubles; `reference` is
/// `[x_los y_los z_los phi theta psi]`. Writes the bounded wrench to
/// `tau_out` (6 doubles) and, when `status_out` is not NULL, the solver
/// outcome.
///
/// # Safety
/// All array pointers must be NULL or valid for 6 doubles; `scenario` must
/// be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn auv_mpc_step(
    scenario: *const AuvScenario,
    pose: *const f64,
    nu: *const f64,
    reference: *const f64,
    tau_out: *mut f64,
    status_out: *mut AuvQpStatus,
) -> AuvStatus {
    guard(|| {
        let config = &non_null(scenario, "scenario")?.config;
        let pose = read_array(pose, "pose")?;
        let nu = read_array(nu, "nu")?;
        let r = read_array(reference, "reference")?;
        let tau_out = non_null_mut(tau_out.cast::<[f64; 6]>(), "tau_out")?;
        if pose.iter().chain(nu).chain(r).any(|v| !v.is_finite()) {
            return Err(Failure::new(AuvStatus::OutOfRange, "inputs must be finite"));
        }
        let state = VehicleState::new(
            Pose::from_vector(&(*pose).into()),
            Velocity::from_vector(&(*nu).into()),
        );
        let reference = LosReference {
            x_los: r[0],
            y_los: r[1],
            z_los: r[2],
            phi_ref: r[3],
            theta_ref: r[4],
            psi_ref: r[5],
        };
        let (tau, sol) = mpc_step(
            &state,
            &state.nu,
            &reference,
            &config.tuning(),
            &config.vehicle_params(),
        )
        .map_err(|e| Failure::new(AuvStatus::OutOfRange, e.to_string()))?;
        *tau_out = tau.0.into();
        if let Some(status) = unsafe { status_out.as_mut() } {
            *status = match sol.status {
                SolveStatus::Solved => AuvQpStatus::Solved,
                SolveStatus::Infeasible => AuvQpStatus::Infeasible,
                SolveStatus::MaxIter => AuvQpStatus::MaxIter,
            };
        }
        Ok(AuvStatus::Ok)
    })
}
