//! Drives the C interface end to end from Rust: model construction, index
//! classification, consistent initialization, integration, a full
//! parallel-in-time run, and the error-reporting contract.

use std::ffi::{c_char, CStr, CString};
use std::f64::consts::PI;
use std::ptr;

use parareal_dae::{project_consistentialize, NewtonConfig};
use parareal_dae_ffi::*;

fn last_error() -> String {
    let ptr = prdae_last_error_message();
    assert!(!ptr.is_null(), "expected an error message to be recorded");
    unsafe { CStr::from_ptr(ptr) }.to_str().unwrap().to_string()
}

fn make_toy() -> *mut PrdaeModel {
    let mut model: *mut PrdaeModel = ptr::null_mut();
    let status = unsafe { prdae_model_toy(&mut model) };
    assert_eq!(status, PrdaeStatus::Ok);
    assert!(!model.is_null());
    model
}

#[test]
fn status_codes_are_pinned() {
    // These values are part of the ABI; C callers compile against them.
    assert_eq!(PrdaeStatus::Ok as i32, 0);
    assert_eq!(PrdaeStatus::NullArgument as i32, 1);
    assert_eq!(PrdaeStatus::InvalidArgument as i32, 2);
    assert_eq!(PrdaeStatus::Panic as i32, 16);
    assert_eq!(PrdaeVariant::Classic as i32, 0);
    assert_eq!(PrdaeVariant::Init as i32, 1);
    assert_eq!(PrdaeIndex::Index2 as i32, 2);
}

#[test]
fn toy_model_dimension_names_and_index() {
    let model = make_toy();

    let mut dim = 0usize;
    assert_eq!(unsafe { prdae_model_dim(model, &mut dim) }, PrdaeStatus::Ok);
    assert_eq!(dim, 3);

    let mut buf = [0 as c_char; 8];
    for (i, expected) in ["x0", "x1", "x2"].iter().enumerate() {
        let status =
            unsafe { prdae_model_component_name(model, i, buf.as_mut_ptr(), buf.len()) };
        assert_eq!(status, PrdaeStatus::Ok);
        let name = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap();
        assert_eq!(name, *expected);
    }

    // A two-byte buffer cannot hold "x0" plus its terminator.
    let status = unsafe { prdae_model_component_name(model, 0, buf.as_mut_ptr(), 2) };
    assert_eq!(status, PrdaeStatus::InvalidArgument);
    assert!(last_error().contains("x0"));

    let status = unsafe { prdae_model_component_name(model, 7, buf.as_mut_ptr(), buf.len()) };
    assert_eq!(status, PrdaeStatus::InvalidArgument);

    let times = [0.0, 0.05];
    let mut index = PrdaeIndex::Index0;
    let status = unsafe { prdae_classify_index(model, times.as_ptr(), times.len(), &mut index) };
    assert_eq!(status, PrdaeStatus::Ok);
    assert_eq!(index, PrdaeIndex::Index2);

    unsafe { prdae_model_free(model) };
}

#[test]
fn netlist_construction_and_parse_errors() {
    // A resistively loaded current source assembles to an index-1 system.
    let netlist = CString::new("I I1 0 1 SIN 2 50\nR R1 1 0 10\n").unwrap();
    let mut model: *mut PrdaeModel = ptr::null_mut();
    let status = unsafe { prdae_model_from_netlist(netlist.as_ptr(), &mut model) };
    assert_eq!(status, PrdaeStatus::Ok);

    let times = [0.0, 0.013];
    let mut index = PrdaeIndex::Index2;
    let status = unsafe { prdae_classify_index(model, times.as_ptr(), times.len(), &mut index) };
    assert_eq!(status, PrdaeStatus::Ok);
    assert_eq!(index, PrdaeIndex::Index1);
    unsafe { prdae_model_free(model) };

    // The bundled benchmark circuit is index 2.
    let mut circuit: *mut PrdaeModel = ptr::null_mut();
    assert_eq!(
        unsafe { prdae_model_two_inductor(&mut circuit) },
        PrdaeStatus::Ok
    );
    let mut index = PrdaeIndex::Index0;
    let status =
        unsafe { prdae_classify_index(circuit, times.as_ptr(), times.len(), &mut index) };
    assert_eq!(status, PrdaeStatus::Ok);
    assert_eq!(index, PrdaeIndex::Index2);
    unsafe { prdae_model_free(circuit) };

    // Malformed netlist text reports a parse error with a message.
    let garbage = CString::new("R R1 1\n").unwrap();
    let mut model: *mut PrdaeModel = ptr::null_mut();
    let status = unsafe { prdae_model_from_netlist(garbage.as_ptr(), &mut model) };
    assert_eq!(status, PrdaeStatus::ParseError);
    assert!(model.is_null());
    assert!(last_error().contains("line 1"), "got: {}", last_error());

    // Non-UTF-8 bytes are rejected before parsing.
    let bad_bytes: [c_char; 2] = [-1, 0];
    let status = unsafe { prdae_model_from_netlist(bad_bytes.as_ptr(), &mut model) };
    assert_eq!(status, PrdaeStatus::InvalidUtf8);

    // Null arguments are reported, not dereferenced.
    let status = unsafe { prdae_model_from_netlist(ptr::null(), &mut model) };
    assert_eq!(status, PrdaeStatus::NullArgument);
    let status = unsafe { prdae_model_from_netlist(netlist.as_ptr(), ptr::null_mut()) };
    assert_eq!(status, PrdaeStatus::NullArgument);
    let status = unsafe { prdae_model_dim(ptr::null(), &mut 0usize) };
    assert_eq!(status, PrdaeStatus::NullArgument);
}

#[test]
fn consistent_initialization_matches_library() {
    let model = make_toy();
    let guess = [0.0f64, -1.0, 0.0];
    let mut projected = [0.0f64; 3];
    let status =
        unsafe { prdae_project_consistent(model, guess.as_ptr(), 3, 0.0, projected.as_mut_ptr()) };
    assert_eq!(status, PrdaeStatus::Ok);

    let reference = project_consistentialize(
        &parareal_dae::models::ToyModel::new(),
        &parareal_dae::nalgebra::DVector::from_column_slice(&guess),
        0.0,
        &NewtonConfig::default(),
    )
    .unwrap();
    for i in 0..3 {
        assert_eq!(projected[i], reference[i], "component {i}");
    }

    // Dimension mismatches are caught before any evaluation.
    let status =
        unsafe { prdae_project_consistent(model, guess.as_ptr(), 2, 0.0, projected.as_mut_ptr()) };
    assert_eq!(status, PrdaeStatus::InvalidArgument);

    // The warm-up path needs constant-coefficient index-2 coupling, which
    // the test model's nonlinear drive term rules out.
    let mut warmed = [0.0f64; 3];
    let status = unsafe {
        prdae_warmup_consistent(model, guess.as_ptr(), 3, 0.0, 1e-4, warmed.as_mut_ptr())
    };
    assert_eq!(status, PrdaeStatus::Unsupported);
    unsafe { prdae_model_free(model) };

    // The benchmark circuit supports it and yields a finite consistent state.
    let mut circuit: *mut PrdaeModel = ptr::null_mut();
    assert_eq!(
        unsafe { prdae_model_two_inductor(&mut circuit) },
        PrdaeStatus::Ok
    );
    let mut dim = 0usize;
    assert_eq!(
        unsafe { prdae_model_dim(circuit, &mut dim) },
        PrdaeStatus::Ok
    );
    let zeros = vec![0.0f64; dim];
    let mut warm = vec![0.0f64; dim];
    let status = unsafe {
        prdae_warmup_consistent(circuit, zeros.as_ptr(), dim, 0.0, 1e-5, warm.as_mut_ptr())
    };
    assert_eq!(status, PrdaeStatus::Ok);
    assert!(warm.iter().all(|v| v.is_finite()));

    unsafe { prdae_model_free(circuit) };
}

#[test]
fn integration_exposes_times_and_states() {
    let model = make_toy();
    let x0 = [0.0f64, 0.0, 0.3 * PI];
    let mut trajectory: *mut PrdaeTrajectory = ptr::null_mut();
    let status =
        unsafe { prdae_integrate(model, x0.as_ptr(), 3, 0.0, 0.01, 1e-3, &mut trajectory) };
    assert_eq!(status, PrdaeStatus::Ok);

    let mut len = 0usize;
    let mut dim = 0usize;
    assert_eq!(
        unsafe { prdae_trajectory_len(trajectory, &mut len) },
        PrdaeStatus::Ok
    );
    assert_eq!(
        unsafe { prdae_trajectory_dim(trajectory, &mut dim) },
        PrdaeStatus::Ok
    );
    assert_eq!(len, 11);
    assert_eq!(dim, 3);

    let times_ptr = unsafe { prdae_trajectory_times(trajectory) };
    assert!(!times_ptr.is_null());
    let times = unsafe { std::slice::from_raw_parts(times_ptr, len) };
    assert_eq!(times[0], 0.0);
    assert!((times[len - 1] - 0.01).abs() < 1e-12);

    // The bulk copy agrees with per-point copies.
    let mut all = vec![0.0f64; len * dim];
    assert_eq!(
        unsafe { prdae_trajectory_states(trajectory, all.as_mut_ptr(), all.len()) },
        PrdaeStatus::Ok
    );
    let mut row = [0.0f64; 3];
    for i in 0..len {
        assert_eq!(
            unsafe { prdae_trajectory_state(trajectory, i, row.as_mut_ptr(), 3) },
            PrdaeStatus::Ok
        );
        assert_eq!(&all[i * dim..(i + 1) * dim], &row);
    }
    assert_eq!(&all[0..3], &x0);

    // Undersized buffers are rejected.
    let status = unsafe { prdae_trajectory_states(trajectory, all.as_mut_ptr(), all.len() - 1) };
    assert_eq!(status, PrdaeStatus::InvalidArgument);

    unsafe { prdae_trajectory_free(trajectory) };
    unsafe { prdae_model_free(model) };
}

#[test]
fn parareal_run_converges_and_exposes_results() {
    let model = make_toy();
    let x0 = [0.0f64, 0.0, 0.3 * PI];
    let config = prdae_run_config_default(PrdaeVariant::Classic, 1e-3, 5e-4, 1e-10);
    assert_eq!(config.coarse_steps_per_window, 1);
    assert_eq!(config.max_iterations, 50);
    assert_eq!(config.workers, 0);

    let mut result: *mut PrdaeRunResult = ptr::null_mut();
    let status = unsafe {
        prdae_parareal_run(model, x0.as_ptr(), 3, 0.0, 0.168, 6, &config, &mut result)
    };
    assert_eq!(status, PrdaeStatus::Ok, "run failed: {}", last_error());

    let mut converged = false;
    let mut iterations = 0usize;
    let mut n_windows = 0usize;
    assert_eq!(
        unsafe { prdae_run_result_converged(result, &mut converged) },
        PrdaeStatus::Ok
    );
    assert_eq!(
        unsafe { prdae_run_result_iterations(result, &mut iterations) },
        PrdaeStatus::Ok
    );
    assert_eq!(
        unsafe { prdae_run_result_n_windows(result, &mut n_windows) },
        PrdaeStatus::Ok
    );
    assert!(converged);
    assert!(iterations >= 1 && iterations <= 50);
    assert_eq!(n_windows, 6);

    // The final sweep satisfied the convergence criterion.
    let mut jump = f64::INFINITY;
    assert_eq!(
        unsafe { prdae_run_result_max_jump(result, iterations, &mut jump) },
        PrdaeStatus::Ok
    );
    assert!(jump < 1.0);
    let status = unsafe { prdae_run_result_max_jump(result, iterations + 1, &mut jump) };
    assert_eq!(status, PrdaeStatus::InvalidArgument);

    // The first boundary is pinned to the initial value in every sweep.
    let mut value = [0.0f64; 3];
    for sweep in [0usize, iterations] {
        assert_eq!(
            unsafe { prdae_run_result_window_value(result, sweep, 0, value.as_mut_ptr(), 3) },
            PrdaeStatus::Ok
        );
        assert_eq!(&value, &x0);
    }
    let status =
        unsafe { prdae_run_result_window_value(result, iterations + 1, 0, value.as_mut_ptr(), 3) };
    assert_eq!(status, PrdaeStatus::InvalidArgument);

    // The stitched trajectory covers the whole range on the fine grid.
    let mut trajectory: *mut PrdaeTrajectory = ptr::null_mut();
    assert_eq!(
        unsafe { prdae_run_result_trajectory(result, model, &mut trajectory) },
        PrdaeStatus::Ok
    );
    let mut len = 0usize;
    assert_eq!(
        unsafe { prdae_trajectory_len(trajectory, &mut len) },
        PrdaeStatus::Ok
    );
    assert_eq!(len, 169); // 6 windows x 28 steps + initial point
    let times = unsafe { std::slice::from_raw_parts(prdae_trajectory_times(trajectory), len) };
    assert!((times[len - 1] - 0.168).abs() < 1e-12);

    unsafe { prdae_trajectory_free(trajectory) };
    unsafe { prdae_run_result_free(result) };
    unsafe { prdae_model_free(model) };

    // Freeing null handles is a no-op rather than a fault.
    unsafe {
        prdae_model_free(ptr::null_mut());
        prdae_trajectory_free(ptr::null_mut());
        prdae_run_result_free(ptr::null_mut());
    }
}

#[test]
fn invalid_run_configuration_is_reported() {
    let model = make_toy();
    let x0 = [0.0f64, 0.0, 0.3 * PI];
    let mut config = prdae_run_config_default(PrdaeVariant::Init, 1e-3, 5e-4, 1e-10);
    config.max_iterations = 0;
    let mut result: *mut PrdaeRunResult = ptr::null_mut();
    let status = unsafe {
        prdae_parareal_run(model, x0.as_ptr(), 3, 0.0, 0.168, 6, &config, &mut result)
    };
    assert_eq!(status, PrdaeStatus::InvalidArgument);
    assert!(result.is_null());
    assert!(!last_error().is_empty());

    // Zero windows is rejected by grid construction.
    let config = prdae_run_config_default(PrdaeVariant::Classic, 1e-3, 5e-4, 1e-10);
    let status = unsafe {
        prdae_parareal_run(model, x0.as_ptr(), 3, 0.0, 0.168, 0, &config, &mut result)
    };
    assert_eq!(status, PrdaeStatus::InvalidArgument);

    unsafe { prdae_model_free(model) };
}
