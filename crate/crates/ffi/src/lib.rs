//! C ABI for the `parareal-dae` solver library.
//!
//! The interface follows a conventional handle-and-status design:
//!
//! - Heap objects (`PrdaeModel`, `PrdaeTrajectory`, `PrdaeRunResult`) are
//!   opaque; callers only ever hold pointers and release them with the
//!   matching `*_free` function.
//! - Every fallible function returns a [`PrdaeStatus`]; `PRDAE_STATUS_OK`
//!   (value 0) means success. On failure a human-readable message is stored
//!   in thread-local storage and can be read with
//!   [`prdae_last_error_message`].
//! - Outputs are written through caller-supplied pointers, which must be
//!   valid for the documented length. Passing a null handle or output
//!   pointer is reported as `PRDAE_STATUS_NULL_ARGUMENT`, never a crash.
//! - Panics never unwind across the boundary: they are caught and reported
//!   as `PRDAE_STATUS_PANIC`.
//!
//! The C header `include/parareal_dae.h` is generated from this file by
//! `cbindgen` in the build script.

use std::any::Any;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use parareal_dae::dae::default_sample_points;
use parareal_dae::models::{assemble_flux_charge_mna, parse_netlist, two_inductor_circuit, ToyModel};
use parareal_dae::nalgebra::DVector;
use parareal_dae::{
    classify_index, finalize_trajectory, integrate, make_grid, project_consistentialize, run,
    warmup_consistentialize, DaeIndex, DaeModel, Error, NewtonConfig, PararealConfig,
    PararealResult, Trajectory, Variant,
};

/// Result code returned by every fallible function in this interface.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrdaeStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// An argument violated the function contract (bad dimension, reversed
    /// interval, out-of-range index, undersized buffer, ...).
    InvalidArgument = 2,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 3,
    /// A model evaluation produced non-finite values.
    Evaluation = 4,
    /// The problem is not index ≤ 2 at some evaluation point.
    IndexMismatch = 5,
    /// Index classification saw different indices at different samples.
    NonUniformIndex = 6,
    /// The Newton corrector did not converge.
    NewtonNonconvergence = 7,
    /// A linear system could not be solved.
    LinearSolve = 8,
    /// An integration step failed; see the message for the inner cause.
    StepFailure = 9,
    /// A window solve inside a parallel-in-time run failed.
    WindowFailure = 10,
    /// Netlist text could not be parsed.
    ParseError = 11,
    /// The netlist fails a structural solvability check.
    Structural = 12,
    /// The model lacks a capability the operation requires.
    Unsupported = 13,
    /// Configuration values were rejected.
    Config = 14,
    /// An I/O operation failed.
    Io = 15,
    /// An internal panic was caught at the boundary.
    Panic = 16,
}

/// Update rule used by the parallel-in-time driver.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrdaeVariant {
    /// Correction applied to all state components.
    Classic = 0,
    /// Correction restricted to differential components, with a projection
    /// onto the constraint set at each window start.
    Init = 1,
}

/// Differentiation index of a DAE, as measured by the matrix chain.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrdaeIndex {
    Index0 = 0,
    Index1 = 1,
    Index2 = 2,
}

/// Settings for [`prdae_parareal_run`]. Obtain defaults from
/// [`prdae_run_config_default`] and adjust fields as needed.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PrdaeRunConfig {
    /// Update rule.
    pub variant: PrdaeVariant,
    /// Fine propagator step size (> 0).
    pub fine_step: f64,
    /// Implicit Euler steps the coarse propagator takes per window (≥ 1).
    pub coarse_steps_per_window: usize,
    /// Relative weight in the jump norm denominators (> 0).
    pub rel_tol: f64,
    /// Absolute weight in the jump norm denominators (> 0).
    pub abs_tol: f64,
    /// Maximum number of update sweeps before giving up (≥ 1).
    pub max_iterations: usize,
    /// Fine-sweep thread count; 0 selects `min(windows, available cores)`.
    pub workers: usize,
}

/// Opaque handle to a DAE model.
pub struct PrdaeModel {
    inner: Box<dyn DaeModel>,
}

/// Opaque handle to a fixed-step trajectory.
pub struct PrdaeTrajectory {
    inner: Trajectory,
}

/// Opaque handle to the result of a parallel-in-time run.
pub struct PrdaeRunResult {
    inner: PararealResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let owned = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(owned));
}

fn status_of(err: &Error) -> PrdaeStatus {
    match err {
        Error::Contract(_) => PrdaeStatus::InvalidArgument,
        Error::Evaluation { .. } => PrdaeStatus::Evaluation,
        Error::IndexMismatch { .. } => PrdaeStatus::IndexMismatch,
        Error::NonUniformIndex(_) => PrdaeStatus::NonUniformIndex,
        Error::NewtonNonconvergence { .. } => PrdaeStatus::NewtonNonconvergence,
        Error::LinearSolve(_) => PrdaeStatus::LinearSolve,
        Error::StepFailure { .. } => PrdaeStatus::StepFailure,
        Error::WindowFailure { .. } => PrdaeStatus::WindowFailure,
        Error::Parse { .. } => PrdaeStatus::ParseError,
        Error::Structural(_) => PrdaeStatus::Structural,
        Error::Unsupported(_) => PrdaeStatus::Unsupported,
        Error::Config(_) => PrdaeStatus::Config,
        Error::Io(_) => PrdaeStatus::Io,
    }
}

fn fail(err: &Error) -> PrdaeStatus {
    set_last_error(&err.to_string());
    status_of(err)
}

fn null_arg(name: &str) -> PrdaeStatus {
    set_last_error(&format!("argument `{name}` must not be null"));
    PrdaeStatus::NullArgument
}

fn invalid(msg: &str) -> PrdaeStatus {
    set_last_error(msg);
    PrdaeStatus::InvalidArgument
}

fn panic_text(payload: &(dyn Any + Send)) -> &str {
    if let Some(s) = payload.downcast_ref::<&str>() {
        s
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s
    } else {
        "unknown panic payload"
    }
}

/// Runs `f`, converting any panic into `PrdaeStatus::Panic` instead of
/// unwinding into the caller.
fn guarded<F: FnOnce() -> PrdaeStatus>(f: F) -> PrdaeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            set_last_error(&format!("internal panic: {}", panic_text(payload.as_ref())));
            PrdaeStatus::Panic
        }
    }
}

fn variant_of(v: PrdaeVariant) -> Variant {
    match v {
        PrdaeVariant::Classic => Variant::Classic,
        PrdaeVariant::Init => Variant::Init,
    }
}

unsafe fn input_vector(
    ptr: *const f64,
    len: usize,
    expected: usize,
    name: &str,
) -> Result<DVector<f64>, PrdaeStatus> {
    if ptr.is_null() {
        return Err(null_arg(name));
    }
    if len != expected {
        return Err(invalid(&format!(
            "argument `{name}` has length {len}, the model has {expected} components"
        )));
    }
    let slice = std::slice::from_raw_parts(ptr, len);
    Ok(DVector::from_column_slice(slice))
}

unsafe fn copy_out(values: &DVector<f64>, buf: *mut f64, buf_len: usize, name: &str) -> PrdaeStatus {
    if buf.is_null() {
        return null_arg(name);
    }
    if buf_len != values.len() {
        return invalid(&format!(
            "buffer `{name}` has length {buf_len}, {} values must be written",
            values.len()
        ));
    }
    let out = std::slice::from_raw_parts_mut(buf, buf_len);
    out.copy_from_slice(values.as_slice());
    PrdaeStatus::Ok
}

unsafe fn emit_model(
    out: *mut *mut PrdaeModel,
    model: Box<dyn DaeModel>,
) -> PrdaeStatus {
    if out.is_null() {
        return null_arg("out");
    }
    *out = Box::into_raw(Box::new(PrdaeModel { inner: model }));
    PrdaeStatus::Ok
}

/// Returns the message of the most recent failure on the calling thread, or
/// null when no failure has been recorded yet. The pointer stays valid until
/// the next failing call on the same thread; copy the string if it must
/// outlive that.
#[no_mangle]
pub extern "C" fn prdae_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(std::ptr::null(), |msg| msg.as_ptr())
    })
}

/// Creates the built-in three-component index-2 test model.
///
/// On success writes a handle to `*out`; release it with
/// [`prdae_model_free`].
#[no_mangle]
pub unsafe extern "C" fn prdae_model_toy(out: *mut *mut PrdaeModel) -> PrdaeStatus {
    guarded(|| emit_model(out, Box::new(ToyModel::new())))
}

/// Creates the bundled two-inductor benchmark circuit (current source, two
/// saturable inductors, resistor pair).
///
/// On success writes a handle to `*out`; release it with
/// [`prdae_model_free`].
#[no_mangle]
pub unsafe extern "C" fn prdae_model_two_inductor(out: *mut *mut PrdaeModel) -> PrdaeStatus {
    guarded(|| match two_inductor_circuit() {
        Ok((_, model)) => emit_model(out, Box::new(model)),
        Err(err) => fail(&err),
    })
}

/// Builds a flux/charge modified-nodal-analysis circuit model from netlist
/// text (NUL-terminated UTF-8).
///
/// On success writes a handle to `*out`; release it with
/// [`prdae_model_free`].
#[no_mangle]
pub unsafe extern "C" fn prdae_model_from_netlist(
    text: *const c_char,
    out: *mut *mut PrdaeModel,
) -> PrdaeStatus {
    guarded(|| {
        if text.is_null() {
            return null_arg("text");
        }
        let text = match CStr::from_ptr(text).to_str() {
            Ok(s) => s,
            Err(_) => {
                set_last_error("netlist text is not valid UTF-8");
                return PrdaeStatus::InvalidUtf8;
            }
        };
        let netlist = match parse_netlist(text) {
            Ok(n) => n,
            Err(err) => return fail(&err),
        };
        match assemble_flux_charge_mna(&netlist) {
            Ok(model) => emit_model(out, Box::new(model)),
            Err(err) => fail(&err),
        }
    })
}

/// Releases a model handle. Passing null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn prdae_model_free(model: *mut PrdaeModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Writes the model's state dimension to `*out`.
#[no_mangle]
pub unsafe extern "C" fn prdae_model_dim(
    model: *const PrdaeModel,
    out: *mut usize,
) -> PrdaeStatus {
    guarded(|| {
        let Some(model) = model.as_ref() else {
            return null_arg("model");
        };
        if out.is_null() {
            return null_arg("out");
        }
        *out = model.inner.n_dof();
        PrdaeStatus::Ok
    })
}

/// Copies the NUL-terminated name of state component `index` into `buf`
/// (capacity `buf_len` bytes, including the terminator).
#[no_mangle]
pub unsafe extern "C" fn prdae_model_component_name(
    model: *const PrdaeModel,
    index: usize,
    buf: *mut c_char,
    buf_len: usize,
) -> PrdaeStatus {
    guarded(|| {
        let Some(model) = model.as_ref() else {
            return null_arg("model");
        };
        if buf.is_null() {
            return null_arg("buf");
        }
        let names = model.inner.component_names();
        let Some(name) = names.get(index) else {
            return invalid(&format!(
                "component index {index} out of range for a model with {} components",
                names.len()
            ));
        };
        let bytes = name.as_bytes();
        if buf_len < bytes.len() + 1 {
            return invalid(&format!(
                "buffer of {buf_len} bytes cannot hold component name `{name}` ({} bytes plus terminator)",
                bytes.len()
            ));
        }
        let out = std::slice::from_raw_parts_mut(buf as *mut u8, bytes.len() + 1);
        out[..bytes.len()].copy_from_slice(bytes);
        out[bytes.len()] = 0;
        PrdaeStatus::Ok
    })
}

/// Classifies the differentiation index of `model` by evaluating the matrix
/// chain at a bundle of probe states for each of the `n_times` sample times.
/// All samples must agree; the common index is written to `*out`.
#[no_mangle]
pub unsafe extern "C" fn prdae_classify_index(
    model: *const PrdaeModel,
    sample_times: *const f64,
    n_times: usize,
    out: *mut PrdaeIndex,
) -> PrdaeStatus {
    guarded(|| {
        let Some(model) = model.as_ref() else {
            return null_arg("model");
        };
        if sample_times.is_null() {
            return null_arg("sample_times");
        }
        if n_times == 0 {
            return invalid("at least one sample time is required");
        }
        if out.is_null() {
            return null_arg("out");
        }
        let times = std::slice::from_raw_parts(sample_times, n_times);
        let samples = default_sample_points(model.inner.n_dof(), times);
        match classify_index(model.inner.as_ref(), &samples) {
            Ok(index) => {
                *out = match index {
                    DaeIndex::Index0 => PrdaeIndex::Index0,
                    DaeIndex::Index1 => PrdaeIndex::Index1,
                    DaeIndex::Index2 => PrdaeIndex::Index2,
                };
                PrdaeStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

/// Projects `x` (length `n`) onto the constraint set at time `t` and writes
/// the consistent state to `out_x` (length `n`). Differential components are
/// preserved in the projector's metric; algebraic components are recomputed.
#[no_mangle]
pub unsafe extern "C" fn prdae_project_consistent(
    model: *const PrdaeModel,
    x: *const f64,
    n: usize,
    t: f64,
    out_x: *mut f64,
) -> PrdaeStatus {
    guarded(|| {
        let Some(model) = model.as_ref() else {
            return null_arg("model");
        };
        let guess = match input_vector(x, n, model.inner.n_dof(), "x") {
            Ok(v) => v,
            Err(status) => return status,
        };
        match project_consistentialize(model.inner.as_ref(), &guess, t, &NewtonConfig::default()) {
            Ok(consistent) => copy_out(&consistent, out_x, n, "out_x"),
            Err(err) => fail(&err),
        }
    })
}

/// Produces a consistent state at `t0` by integrating two implicit Euler
/// steps of size `h_warm` starting from `x` at `t0 - 2·h_warm`, then writes
/// it to `out_x` (length `n`). Requires a model with a constant leading
/// matrix and linear index-2 coupling.
#[no_mangle]
pub unsafe extern "C" fn prdae_warmup_consistent(
    model: *const PrdaeModel,
    x: *const f64,
    n: usize,
    t0: f64,
    h_warm: f64,
    out_x: *mut f64,
) -> PrdaeStatus {
    guarded(|| {
        let Some(model) = model.as_ref() else {
            return null_arg("model");
        };
        let guess = match input_vector(x, n, model.inner.n_dof(), "x") {
            Ok(v) => v,
            Err(status) => return status,
        };
        match warmup_consistentialize(
            model.inner.as_ref(),
            &guess,
            t0,
            h_warm,
            &NewtonConfig::default(),
        ) {
            Ok(consistent) => copy_out(&consistent, out_x, n, "out_x"),
            Err(err) => fail(&err),
        }
    })
}

/// Integrates `model` from `x0` (length `n`) over `[t0, t_end]` with fixed
/// implicit Euler steps of size `h`.
///
/// On success writes a trajectory handle to `*out`; release it with
/// [`prdae_trajectory_free`].
#[no_mangle]
pub unsafe extern "C" fn prdae_integrate(
    model: *const PrdaeModel,
    x0: *const f64,
    n: usize,
    t0: f64,
    t_end: f64,
    h: f64,
    out: *mut *mut PrdaeTrajectory,
) -> PrdaeStatus {
    guarded(|| {
        let Some(model) = model.as_ref() else {
            return null_arg("model");
        };
        let start = match input_vector(x0, n, model.inner.n_dof(), "x0") {
            Ok(v) => v,
            Err(status) => return status,
        };
        if out.is_null() {
            return null_arg("out");
        }
        match integrate(
            model.inner.as_ref(),
            &start,
            t0,
            t_end,
            h,
            &NewtonConfig::default(),
        ) {
            Ok(trajectory) => {
                *out = Box::into_raw(Box::new(PrdaeTrajectory { inner: trajectory }));
                PrdaeStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

/// Writes the number of stored points (including the initial state) to
/// `*out`.
#[no_mangle]
pub unsafe extern "C" fn prdae_trajectory_len(
    trajectory: *const PrdaeTrajectory,
    out: *mut usize,
) -> PrdaeStatus {
    guarded(|| {
        let Some(trajectory) = trajectory.as_ref() else {
            return null_arg("trajectory");
        };
        if out.is_null() {
            return null_arg("out");
        }
        *out = trajectory.inner.times.len();
        PrdaeStatus::Ok
    })
}

/// Writes the state dimension of the stored points to `*out`.
#[no_mangle]
pub unsafe extern "C" fn prdae_trajectory_dim(
    trajectory: *const PrdaeTrajectory,
    out: *mut usize,
) -> PrdaeStatus {
    guarded(|| {
        let Some(trajectory) = trajectory.as_ref() else {
            return null_arg("trajectory");
        };
        if out.is_null() {
            return null_arg("out");
        }
        *out = trajectory.inner.states.first().map_or(0, |s| s.len());
        PrdaeStatus::Ok
    })
}

/// Returns a borrowed pointer to the trajectory's time grid
/// ([`prdae_trajectory_len`] values), or null if `trajectory` is null. The
/// pointer is valid until the trajectory is freed.
#[no_mangle]
pub unsafe extern "C" fn prdae_trajectory_times(
    trajectory: *const PrdaeTrajectory,
) -> *const f64 {
    match trajectory.as_ref() {
        Some(t) => t.inner.times.as_ptr(),
        None => std::ptr::null(),
    }
}

/// Copies the state at point `index` into `buf` (length `buf_len`, which
/// must equal the trajectory dimension).
#[no_mangle]
pub unsafe extern "C" fn prdae_trajectory_state(
    trajectory: *const PrdaeTrajectory,
    index: usize,
    buf: *mut f64,
    buf_len: usize,
) -> PrdaeStatus {
    guarded(|| {
        let Some(trajectory) = trajectory.as_ref() else {
            return null_arg("trajectory");
        };
        let Some(state) = trajectory.inner.states.get(index) else {
            return invalid(&format!(
                "point index {index} out of range for a trajectory with {} points",
                trajectory.inner.states.len()
            ));
        };
        copy_out(state, buf, buf_len, "buf")
    })
}

/// Copies all states row-major into `buf` (length `buf_len`, which must
/// equal `len · dim`): point `i`, component `j` lands at `buf[i·dim + j]`.
#[no_mangle]
pub unsafe extern "C" fn prdae_trajectory_states(
    trajectory: *const PrdaeTrajectory,
    buf: *mut f64,
    buf_len: usize,
) -> PrdaeStatus {
    guarded(|| {
        let Some(trajectory) = trajectory.as_ref() else {
            return null_arg("trajectory");
        };
        if buf.is_null() {
            return null_arg("buf");
        }
        let len = trajectory.inner.states.len();
        let dim = trajectory.inner.states.first().map_or(0, |s| s.len());
        if buf_len != len * dim {
            return invalid(&format!(
                "buffer has length {buf_len}, the trajectory holds {len} x {dim} values"
            ));
        }
        let out = std::slice::from_raw_parts_mut(buf, buf_len);
        for (i, state) in trajectory.inner.states.iter().enumerate() {
            out[i * dim..(i + 1) * dim].copy_from_slice(state.as_slice());
        }
        PrdaeStatus::Ok
    })
}

/// Releases a trajectory handle. Passing null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn prdae_trajectory_free(trajectory: *mut PrdaeTrajectory) {
    if !trajectory.is_null() {
        drop(Box::from_raw(trajectory));
    }
}

/// Returns a configuration with the given update rule, fine step, and jump
/// norm weights; the remaining fields take their defaults (one coarse step
/// per window, at most 50 sweeps, automatic worker count).
#[no_mangle]
pub extern "C" fn prdae_run_config_default(
    variant: PrdaeVariant,
    fine_step: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> PrdaeRunConfig {
    PrdaeRunConfig {
        variant,
        fine_step,
        coarse_steps_per_window: 1,
        rel_tol,
        abs_tol,
        max_iterations: 50,
        workers: 0,
    }
}

/// Runs the windowed parallel-in-time solver on `[t0, t_end]` split into
/// `n_windows` equal windows, starting from `x0` (length `n`).
///
/// On success writes a result handle to `*out`; release it with
/// [`prdae_run_result_free`].
#[no_mangle]
pub unsafe extern "C" fn prdae_parareal_run(
    model: *const PrdaeModel,
    x0: *const f64,
    n: usize,
    t0: f64,
    t_end: f64,
    n_windows: usize,
    config: *const PrdaeRunConfig,
    out: *mut *mut PrdaeRunResult,
) -> PrdaeStatus {
    guarded(|| {
        let Some(model) = model.as_ref() else {
            return null_arg("model");
        };
        let start = match input_vector(x0, n, model.inner.n_dof(), "x0") {
            Ok(v) => v,
            Err(status) => return status,
        };
        let Some(config) = config.as_ref() else {
            return null_arg("config");
        };
        if out.is_null() {
            return null_arg("out");
        }
        let grid = match make_grid(t0, t_end, n_windows) {
            Ok(g) => g,
            Err(err) => return fail(&err),
        };
        let mut cfg = PararealConfig::new(
            variant_of(config.variant),
            config.fine_step,
            config.rel_tol,
            config.abs_tol,
        );
        cfg.coarse_steps_per_window = config.coarse_steps_per_window;
        cfg.max_iterations = config.max_iterations;
        cfg.workers = (config.workers > 0).then_some(config.workers);
        match run(model.inner.as_ref(), &start, &grid, &cfg) {
            Ok(result) => {
                *out = Box::into_raw(Box::new(PrdaeRunResult { inner: result }));
                PrdaeStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

/// Writes the number of update sweeps the run executed to `*out`.
#[no_mangle]
pub unsafe extern "C" fn prdae_run_result_iterations(
    result: *const PrdaeRunResult,
    out: *mut usize,
) -> PrdaeStatus {
    guarded(|| {
        let Some(result) = result.as_ref() else {
            return null_arg("result");
        };
        if out.is_null() {
            return null_arg("out");
        }
        *out = result.inner.iterations_used;
        PrdaeStatus::Ok
    })
}

/// Writes whether the final sweep's largest jump norm fell below 1 to
/// `*out`.
#[no_mangle]
pub unsafe extern "C" fn prdae_run_result_converged(
    result: *const PrdaeRunResult,
    out: *mut bool,
) -> PrdaeStatus {
    guarded(|| {
        let Some(result) = result.as_ref() else {
            return null_arg("result");
        };
        if out.is_null() {
            return null_arg("out");
        }
        *out = result.inner.converged;
        PrdaeStatus::Ok
    })
}

/// Writes the number of windows in the run's grid to `*out`.
#[no_mangle]
pub unsafe extern "C" fn prdae_run_result_n_windows(
    result: *const PrdaeRunResult,
    out: *mut usize,
) -> PrdaeStatus {
    guarded(|| {
        let Some(result) = result.as_ref() else {
            return null_arg("result");
        };
        if out.is_null() {
            return null_arg("out");
        }
        *out = result.inner.grid.n_windows();
        PrdaeStatus::Ok
    })
}

/// Writes the largest weighted jump norm of update sweep `sweep` to `*out`.
/// Sweeps are numbered `1..=iterations`; values below 1 count as converged.
#[no_mangle]
pub unsafe extern "C" fn prdae_run_result_max_jump(
    result: *const PrdaeRunResult,
    sweep: usize,
    out: *mut f64,
) -> PrdaeStatus {
    guarded(|| {
        let Some(result) = result.as_ref() else {
            return null_arg("result");
        };
        if out.is_null() {
            return null_arg("out");
        }
        if sweep == 0 || sweep > result.inner.jump_history.len() {
            return invalid(&format!(
                "sweep {sweep} out of range, the run executed {} update sweeps",
                result.inner.jump_history.len()
            ));
        }
        *out = result.inner.jump_history[sweep - 1].max;
        PrdaeStatus::Ok
    })
}

/// Copies the window start value at `boundary` (`0..=n_windows`) after
/// update sweep `sweep` into `buf` (length `buf_len`, which must equal the
/// model dimension). Sweep 0 holds the coarse seeds.
#[no_mangle]
pub unsafe extern "C" fn prdae_run_result_window_value(
    result: *const PrdaeRunResult,
    sweep: usize,
    boundary: usize,
    buf: *mut f64,
    buf_len: usize,
) -> PrdaeStatus {
    guarded(|| {
        let Some(result) = result.as_ref() else {
            return null_arg("result");
        };
        let sweeps = &result.inner.window_initial_values;
        let Some(row) = sweeps.get(sweep) else {
            return invalid(&format!(
                "sweep {sweep} out of range, values exist for sweeps 0..={}",
                sweeps.len().saturating_sub(1)
            ));
        };
        let Some(value) = row.get(boundary) else {
            return invalid(&format!(
                "boundary {boundary} out of range, the grid has boundaries 0..={}",
                row.len().saturating_sub(1)
            ));
        };
        copy_out(value, buf, buf_len, "buf")
    })
}

/// Concatenates the final sweep's fine solves into one trajectory over the
/// whole time range. `model` must be the model the run was produced with.
///
/// On success writes a trajectory handle to `*out`; release it with
/// [`prdae_trajectory_free`].
#[no_mangle]
pub unsafe extern "C" fn prdae_run_result_trajectory(
    result: *const PrdaeRunResult,
    model: *const PrdaeModel,
    out: *mut *mut PrdaeTrajectory,
) -> PrdaeStatus {
    guarded(|| {
        let Some(result) = result.as_ref() else {
            return null_arg("result");
        };
        let Some(model) = model.as_ref() else {
            return null_arg("model");
        };
        if out.is_null() {
            return null_arg("out");
        }
        match finalize_trajectory(&result.inner, model.inner.as_ref()) {
            Ok(trajectory) => {
                *out = Box::into_raw(Box::new(PrdaeTrajectory { inner: trajectory }));
                PrdaeStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

/// Releases a run result handle. Passing null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn prdae_run_result_free(result: *mut PrdaeRunResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}
