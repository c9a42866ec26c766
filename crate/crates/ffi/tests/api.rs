use std::ffi::{CStr, CString};
use std::ptr;

use auv_pathfollow::harness::{read_log, LogFormat, ScenarioConfig};
use auv_pathfollow_ffi::*;

fn last_error() -> String {
    let p = auv_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

fn scenario_from(config: &ScenarioConfig) -> *mut AuvScenario {
    let json = CString::new(config.to_json()).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { auv_scenario_from_json(json.as_ptr(), &mut s) },
        AuvStatus::Ok
    );
    s
}

fn short(seconds: f64) -> ScenarioConfig {
    let mut c = ScenarioConfig::reference();
    c.max_sim_time = seconds;
    c
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(auv_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn null_arguments_are_rejected() {
    unsafe {
        assert_eq!(
            auv_scenario_default(ptr::null_mut()),
            AuvStatus::NullArgument
        );
        let mut s = ptr::null_mut();
        assert_eq!(
            auv_scenario_from_json(ptr::null(), &mut s),
            AuvStatus::NullArgument
        );
        assert!(last_error().contains("json"));
        assert!(s.is_null());
        let mut r = ptr::null_mut();
        assert_eq!(auv_simulate(ptr::null(), &mut r), AuvStatus::NullArgument);
        assert_eq!(
            auv_scenario_set_seed(ptr::null_mut(), 1),
            AuvStatus::NullArgument
        );
        let mut n = 0usize;
        assert_eq!(
            auv_result_row_count(ptr::null(), &mut n),
            AuvStatus::NullArgument
        );
        auv_scenario_free(ptr::null_mut());
        auv_result_free(ptr::null_mut());
        auv_string_free(ptr::null_mut());
    }
}

#[test]
fn invalid_utf8_is_reported() {
    let bytes = [0xffu8, 0xfe, 0];
    let mut s = ptr::null_mut();
    let status = unsafe { auv_scenario_from_json(bytes.as_ptr().cast(), &mut s) };
    assert_eq!(status, AuvStatus::InvalidString);
}

#[test]
fn config_errors_name_the_field() {
    let mut value: serde_json::Value =
        serde_json::from_str(&ScenarioConfig::reference().to_json()).unwrap();
    value["vehicle"].as_object_mut().unwrap().remove("M");
    let json = CString::new(value.to_string()).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { auv_scenario_from_json(json.as_ptr(), &mut s) },
        AuvStatus::Config
    );
    assert!(last_error().contains("vehicle.M"));

    let mut bad = ScenarioConfig::reference();
    bad.ts = -1.0;
    let json = CString::new(bad.to_json()).unwrap();
    assert_eq!(
        unsafe { auv_scenario_from_json(json.as_ptr(), &mut s) },
        AuvStatus::Config
    );
    assert!(last_error().contains("Ts"));

    let path = CString::new("/nonexistent/scenario.json").unwrap();
    assert_eq!(
        unsafe { auv_scenario_load(path.as_ptr(), &mut s) },
        AuvStatus::Io
    );
}

#[test]
fn scenario_json_round_trips() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(auv_scenario_default(&mut s), AuvStatus::Ok);
        assert_eq!(auv_scenario_set_seed(s, 1234), AuvStatus::Ok);
        assert_eq!(auv_scenario_set_rho_c(s, 0.75), AuvStatus::Ok);
        assert_eq!(auv_scenario_set_rho_c(s, -1.0), AuvStatus::OutOfRange);
        assert_eq!(auv_scenario_set_rho_c(s, f64::NAN), AuvStatus::OutOfRange);
        let mut text = ptr::null_mut();
        assert_eq!(auv_scenario_to_json(s, &mut text), AuvStatus::Ok);
        let config = ScenarioConfig::from_json(CStr::from_ptr(text).to_str().unwrap()).unwrap();
        auv_string_free(text);
        auv_scenario_free(s);
        assert_eq!(config.seed, 1234);
        assert_eq!(config.guidance.rho_c, 0.75);
    }
}

#[test]
fn simulation_rows_match_the_core_run() {
    let config = short(8.0);
    let expected = auv_pathfollow::harness::run_simulation(&config).unwrap();
    unsafe {
        let s = scenario_from(&config);
        let mut r = ptr::null_mut();
        assert_eq!(auv_simulate(s, &mut r), AuvStatus::Ok);
        let mut n = 0usize;
        assert_eq!(auv_result_row_count(r, &mut n), AuvStatus::Ok);
        assert_eq!(n, expected.log.len());
        let mut row = std::mem::zeroed::<AuvLogRow>();
        for (k, want) in expected.log.rows.iter().enumerate() {
            assert_eq!(auv_result_row(r, k, &mut row), AuvStatus::Ok);
            assert_eq!(row.t, want.t);
            assert_eq!(row.pose, want.pose);
            assert_eq!(row.tau, want.tau);
            assert_eq!(row.los_ref, want.los_ref);
            assert_eq!(row.qp_status, AuvQpStatus::Solved);
        }
        assert_eq!(auv_result_row(r, n, &mut row), AuvStatus::OutOfRange);

        let mut m = std::mem::zeroed::<AuvMetrics>();
        assert_eq!(auv_result_metrics(r, &mut m), AuvStatus::Ok);
        assert_eq!(m.mean_surge, expected.metrics.mean_surge);
        assert_eq!(m.waypoint_count, 4);
        assert!(!m.completed);
        let (mut t, mut reached) = (0.0, true);
        assert_eq!(
            auv_result_hit_time(r, 0, &mut t, &mut reached),
            AuvStatus::Ok
        );
        assert!(!reached && t.is_nan());
        assert_eq!(
            auv_result_hit_time(r, 4, &mut t, &mut reached),
            AuvStatus::OutOfRange
        );
        let mut present = false;
        assert_eq!(
            auv_result_cross_track(r, 0, &mut t, &mut present),
            AuvStatus::Ok
        );
        assert!(present && t.is_finite());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.csv");
        let c_path = CString::new(path.to_str().unwrap()).unwrap();
        assert_eq!(
            auv_result_write_log(r, c_path.as_ptr(), AuvLogFormat::Csv),
            AuvStatus::Ok
        );
        assert_eq!(read_log(&path, LogFormat::Csv).unwrap(), expected.log);
        let bad = CString::new(dir.path().join("no/such/dir.csv").to_str().unwrap()).unwrap();
        assert_eq!(
            auv_result_write_log(r, bad.as_ptr(), AuvLogFormat::Json),
            AuvStatus::Io
        );

        auv_result_free(r);
        auv_scenario_free(s);
    }
}

#[test]
fn abort_returns_the_partial_log() {
    let mut config = short(5.0);
    config.initial_state.pose[4] = 1.45;
    config.initial_state.nu[4] = 3.0;
    unsafe {
        let s = scenario_from(&config);
        let mut r = ptr::null_mut();
        assert_eq!(auv_simulate(s, &mut r), AuvStatus::RuntimeAbort);
        assert!(last_error().contains("pitch"));
        let mut n = 0usize;
        assert_eq!(auv_result_row_count(r, &mut n), AuvStatus::Ok);
        assert_eq!(n, 1);
        auv_result_free(r);
        auv_scenario_free(s);
    }
}

#[test]
fn mpc_step_respects_the_input_bound() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(auv_scenario_default(&mut s), AuvStatus::Ok);
        let pose = [0.0, 0.0, -10.0, 0.0, 0.0, 0.0];
        let nu = [0.0; 6];
        let reference = [50.0, -40.0, 5.0, 0.0, 0.3, 2.5];
        let mut tau = [0.0; 6];
        let mut status = AuvQpStatus::Terminal;
        let rc = auv_mpc_step(
            s,
            pose.as_ptr(),
            nu.as_ptr(),
            reference.as_ptr(),
            tau.as_mut_ptr(),
            &mut status,
        );
        assert_eq!(rc, AuvStatus::Ok);
        assert_eq!(status, AuvQpStatus::Solved);
        assert!(tau.iter().all(|v| v.abs() <= 2000.0));
        assert!(tau.iter().any(|v| v.abs() > 1.0));

        let rc = auv_mpc_step(
            s,
            pose.as_ptr(),
            nu.as_ptr(),
            reference.as_ptr(),
            tau.as_mut_ptr(),
            ptr::null_mut(),
        );
        assert_eq!(rc, AuvStatus::Ok);
        let flipped = [0.0, 0.0, -10.0, 0.0, 1.56, 0.0];
        let rc = auv_mpc_step(
            s,
            flipped.as_ptr(),
            nu.as_ptr(),
            reference.as_ptr(),
            tau.as_mut_ptr(),
            ptr::null_mut(),
        );
        assert_eq!(rc, AuvStatus::OutOfRange);
        assert_eq!(
            auv_mpc_step(
                s,
                ptr::null(),
                nu.as_ptr(),
                reference.as_ptr(),
                tau.as_mut_ptr(),
                ptr::null_mut()
            ),
            AuvStatus::NullArgument
        );
        auv_scenario_free(s);
    }
}

#[test]
fn errors_are_per_thread() {
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { auv_scenario_from_json(ptr::null(), &mut s) },
        AuvStatus::NullArgument
    );
    let other = std::thread::spawn(|| auv_last_error_message().is_null())
        .join()
        .unwrap();
    assert!(other);
}
