//! Windowed parallel-in-time driver.
//!
//! The time span is split into uniform windows. Each sweep propagates every
//! window concurrently with a fine implicit-Euler solve, then walks the
//! windows in order, combining fine and coarse endpoints into updated window
//! start values. Two update rules are provided: the classic correction on all
//! state components, and a variant that applies the correction only to the
//! differential components and then moves the result back onto the
//! constraint set.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::dae::{projector_chain, ComponentClass, DaeModel};
use crate::error::{Error, Result};
use crate::init::project_consistentialize;
use crate::integrator::{euler_step, integrate, NewtonConfig, Trajectory};

/// Uniform partition of `[t0, t_end]` into `N` windows with boundaries
/// `T_0 .. T_N`.
///
/// Interior boundaries are computed as `t0 + n·ΔT` with `ΔT = (t_end−t0)/N`;
/// the last boundary is pinned to `t_end` exactly.
#[derive(Debug, Clone)]
pub struct WindowGrid {
    boundaries: Vec<f64>,
}

impl WindowGrid {
    pub fn n_windows(&self) -> usize {
        self.boundaries.len() - 1
    }

    /// All `N + 1` boundary times, strictly increasing.
    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn t0(&self) -> f64 {
        self.boundaries[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.boundaries.last().expect("grid has boundaries")
    }

    /// Nominal window length.
    pub fn delta_t(&self) -> f64 {
        (self.t_end() - self.t0()) / self.n_windows() as f64
    }
}

/// Builds the uniform window grid.
pub fn make_grid(t0: f64, t_end: f64, n_windows: usize) -> Result<WindowGrid> {
    if n_windows == 0 {
        return Err(Error::contract("make_grid: need at least one window"));
    }
    if !(t_end > t0) {
        return Err(Error::contract(format!(
            "make_grid: need t_end > t0, got [{t0}, {t_end}]"
        )));
    }
    if !t0.is_finite() || !t_end.is_finite() {
        return Err(Error::contract("make_grid: boundaries must be finite"));
    }
    let dt = (t_end - t0) / n_windows as f64;
    let mut boundaries: Vec<f64> = (0..n_windows).map(|i| t0 + i as f64 * dt).collect();
    boundaries.push(t_end);
    Ok(WindowGrid { boundaries })
}

/// Which update rule the driver applies at window boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Correction on all state components.
    Classic,
    /// Correction restricted to differential components, followed by a
    /// projection onto the constraint set at the boundary time.
    Init,
}

/// Which components enter the jump norm that drives convergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorComponents {
    All,
    Differential,
}

/// Driver settings.
#[derive(Debug, Clone)]
pub struct PararealConfig {
    pub variant: Variant,
    /// Fine propagator step size.
    pub fine_h: f64,
    /// Implicit Euler steps the coarse propagator takes per window.
    pub coarse_steps_per_window: usize,
    /// Relative weight in the jump norm denominators.
    pub rel_tol: f64,
    /// Absolute weight in the jump norm denominators.
    pub abs_tol: f64,
    /// Maximum number of update sweeps before giving up.
    pub max_iterations: usize,
    /// Fine-sweep thread count; `None` picks
    /// `min(windows, available parallelism)`.
    pub workers: Option<usize>,
    pub error_components: ErrorComponents,
    pub newton: NewtonConfig,
}

impl PararealConfig {
    pub fn new(variant: Variant, fine_h: f64, rel_tol: f64, abs_tol: f64) -> Self {
        PararealConfig {
            variant,
            fine_h,
            coarse_steps_per_window: 1,
            rel_tol,
            abs_tol,
            max_iterations: 50,
            workers: None,
            error_components: ErrorComponents::Differential,
            newton: NewtonConfig::default(),
        }
    }

    fn validate(&self, grid: &WindowGrid) -> Result<()> {
        if !(self.fine_h > 0.0) {
            return Err(Error::contract(format!(
                "parareal: fine step must be positive, got {}",
                self.fine_h
            )));
        }
        if self.coarse_steps_per_window == 0 {
            return Err(Error::contract(
                "parareal: need at least one coarse step per window",
            ));
        }
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(Error::contract(format!(
                "parareal: jump norm tolerances must be positive, got rel {} abs {}",
                self.rel_tol, self.abs_tol
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::contract("parareal: max_iterations must be >= 1"));
        }
        let dt = grid.delta_t();
        let slack = 1.0 + 1e-12;
        if self.fine_h > dt * slack {
            return Err(Error::contract(format!(
                "parareal: fine step {} exceeds the window length {dt}",
                self.fine_h
            )));
        }
        if self.variant == Variant::Classic && self.fine_h > dt / 2.0 * slack {
            return Err(Error::contract(format!(
                "parareal: the all-components update needs at least two fine steps \
                 per window (have fine step {} on windows of {dt})",
                self.fine_h
            )));
        }
        Ok(())
    }
}

/// Jump norms of one update sweep.
#[derive(Debug, Clone)]
pub struct JumpSweep {
    /// One value per window; index `i` belongs to the window ending at
    /// boundary `i + 1`.
    pub per_window: Vec<f64>,
    pub max: f64,
    /// Index into `per_window` of the first window failing the `< 1`
    /// criterion, if any.
    pub first_unconverged: Option<usize>,
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct PararealResult {
    pub grid: WindowGrid,
    /// Number of update sweeps executed.
    pub iterations_used: usize,
    /// True when the final sweep's largest jump norm fell below 1.
    pub converged: bool,
    /// Window start values per sweep: `[sweep][boundary]`, where sweep 0
    /// holds the seeds and boundary indices run `0..=N`.
    pub window_initial_values: Vec<Vec<DVector<f64>>>,
    /// Fine solves of the final sweep, one per window.
    pub fine_trajectories: Vec<Trajectory>,
    /// One entry per executed sweep.
    pub jump_history: Vec<JumpSweep>,
}

/// Weighted RMS distance between `candidate` and `reference`.
///
/// With `d = projector·(candidate − reference)` (or the plain difference when
/// no projector is given), returns
/// `sqrt( (1/n_active) · Σ (d_i / (abs_tol + rel_tol·|weights_source_i|))² )`
/// where the sum runs over the `n_active` rows in which the projector is not
/// identically zero. Values below 1 mean the two states agree to tolerance.
pub fn jump_norm(
    candidate: &DVector<f64>,
    reference: &DVector<f64>,
    weights_source: &DVector<f64>,
    rel_tol: f64,
    abs_tol: f64,
    projector: Option<&DMatrix<f64>>,
) -> Result<f64> {
    let n = candidate.len();
    if reference.len() != n || weights_source.len() != n {
        return Err(Error::contract(format!(
            "jump_norm: length mismatch ({n}, {}, {})",
            reference.len(),
            weights_source.len()
        )));
    }
    if let Some(p) = projector {
        if p.shape() != (n, n) {
            return Err(Error::contract(format!(
                "jump_norm: projector must be {n}x{n}, got {}x{}",
                p.nrows(),
                p.ncols()
            )));
        }
    }
    if !(rel_tol >= 0.0) || !(abs_tol >= 0.0) || rel_tol + abs_tol <= 0.0 {
        return Err(Error::contract(format!(
            "jump_norm: tolerances must be nonnegative and not both zero, \
             got rel {rel_tol} abs {abs_tol}"
        )));
    }
    for v in candidate
        .iter()
        .chain(reference.iter())
        .chain(weights_source.iter())
    {
        if !v.is_finite() {
            return Err(Error::Evaluation {
                t: f64::NAN,
                context: "jump_norm input".to_string(),
            });
        }
    }

    let raw = candidate - reference;
    let (d, active): (DVector<f64>, Vec<usize>) = match projector {
        None => (raw, (0..n).collect()),
        Some(p) => {
            let largest = p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if largest == 0.0 {
                return Ok(0.0);
            }
            let threshold = 1e-14 * largest;
            let active = (0..n)
                .filter(|&i| p.row(i).iter().any(|v| v.abs() > threshold))
                .collect();
            (p * raw, active)
        }
    };
    if active.is_empty() {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for &i in &active {
        let denom = abs_tol + rel_tol * weights_source[i].abs();
        let term = if denom > 0.0 {
            d[i] / denom
        } else if d[i] == 0.0 {
            0.0
        } else {
            return Ok(f64::INFINITY);
        };
        sum += term * term;
    }
    Ok((sum / active.len() as f64).sqrt())
}

fn window_failure(window: usize, iteration: usize, source: Error) -> Error {
    Error::WindowFailure {
        window,
        iteration,
        source: Box::new(source),
    }
}

/// Thread count the fine sweep will actually use.
pub fn effective_workers(requested: Option<usize>, n_windows: usize) -> usize {
    let hardware = std::thread::available_parallelism()
        .map(|v| v.get())
        .unwrap_or(1);
    requested
        .unwrap_or_else(|| n_windows.min(hardware))
        .clamp(1, n_windows.max(1))
}

/// Coarse propagator: `steps` implicit Euler steps across one window.
fn coarse_endpoint(
    model: &dyn DaeModel,
    start: &DVector<f64>,
    t_start: f64,
    t_end: f64,
    steps: usize,
    newton: &NewtonConfig,
) -> Result<DVector<f64>> {
    let h = (t_end - t_start) / steps as f64;
    let mut state = start.clone();
    let mut t = t_start;
    for j in 0..steps {
        let t_next = if j + 1 == steps {
            t_end
        } else {
            t_start + (j + 1) as f64 * h
        };
        state = euler_step(model, &state, t, t_next - t, newton)?;
        t = t_next;
    }
    Ok(state)
}

/// Fine solves for all windows, distributed over a small thread pool.
///
/// Window `i` integrates from `seeds[i]`; results are written into
/// per-window slots, so the outcome does not depend on scheduling order and
/// is bitwise identical for any worker count.
fn fine_sweep(
    model: &dyn DaeModel,
    seeds: &[DVector<f64>],
    grid: &WindowGrid,
    cfg: &PararealConfig,
    sweep_no: usize,
) -> Result<Vec<Trajectory>> {
    let n_windows = grid.n_windows();
    let bounds = grid.boundaries();
    let workers = effective_workers(cfg.workers, n_windows);
    let next = AtomicUsize::new(0);
    let slots: Vec<OnceLock<Result<Trajectory>>> = (0..n_windows).map(|_| OnceLock::new()).collect();

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n_windows {
                    break;
                }
                let result = integrate(
                    model,
                    &seeds[i],
                    bounds[i],
                    bounds[i + 1],
                    cfg.fine_h,
                    &cfg.newton,
                );
                let _ = slots[i].set(result);
            });
        }
    });

    let mut out = Vec::with_capacity(n_windows);
    for (i, slot) in slots.into_iter().enumerate() {
        let result = slot
            .into_inner()
            .expect("worker pool fills every window slot");
        out.push(result.map_err(|e| window_failure(i + 1, sweep_no, e))?);
    }
    Ok(out)
}

/// Runs the windowed parallel-in-time iteration.
///
/// Sweep 0 seeds every boundary with `x0` (the restricted-update variant
/// additionally moves each seed onto the constraint set at its boundary
/// time). Every later sweep integrates all windows concurrently from the
/// current start values, then updates the start values window by window and
/// records the jump norm between each updated value and the fine endpoint
/// reaching the same boundary. The run stops when the largest jump norm of a
/// sweep falls below 1, or after `max_iterations` sweeps (a nonconverged
/// result, not an error). The first boundary keeps `x0` throughout.
pub fn run(
    model: &dyn DaeModel,
    x0: &DVector<f64>,
    grid: &WindowGrid,
    cfg: &PararealConfig,
) -> Result<PararealResult> {
    let n = model.n_dof();
    if x0.len() != n {
        return Err(Error::contract(format!(
            "parareal: initial state length {} does not match model dimension {n}",
            x0.len()
        )));
    }
    if !x0.iter().all(|v| v.is_finite()) {
        return Err(Error::contract("parareal: initial state must be finite"));
    }
    cfg.validate(grid)?;
    let n_windows = grid.n_windows();
    let bounds = grid.boundaries();

    // Differential projector, reused as a constant matrix when the model
    // declares a state-independent range for its second projector level.
    let pp1_star: Option<DMatrix<f64>> = if model.constant_q1_range() {
        Some(projector_chain(model, x0, x0, bounds[0])?.pp1)
    } else {
        None
    };
    let pp1_at = |state: &DVector<f64>, t: f64| -> Result<DMatrix<f64>> {
        match &pp1_star {
            Some(m) => Ok(m.clone()),
            None => Ok(projector_chain(model, state, state, t)?.pp1),
        }
    };

    // Sweep 0: constant seeding from the global initial value.
    let mut current: Vec<DVector<f64>> = Vec::with_capacity(n_windows + 1);
    current.push(x0.clone());
    for i in 1..=n_windows {
        let seed = match cfg.variant {
            Variant::Classic => x0.clone(),
            Variant::Init => project_consistentialize(model, x0, bounds[i], &cfg.newton)
                .map_err(|e| window_failure(i, 0, e))?,
        };
        current.push(seed);
    }

    let mut window_initial_values = vec![current.clone()];
    let mut jump_history: Vec<JumpSweep> = Vec::new();
    let mut fine_trajectories: Vec<Trajectory> = Vec::new();
    let mut converged = false;
    let mut sweeps = 0usize;

    while sweeps < cfg.max_iterations {
        let sweep_no = sweeps + 1;
        fine_trajectories = fine_sweep(model, &current, grid, cfg, sweep_no)?;

        // Sequential update sweep in window order.
        let mut next: Vec<DVector<f64>> = Vec::with_capacity(n_windows + 1);
        next.push(x0.clone());
        let mut per_window = Vec::with_capacity(n_windows);
        for i in 1..=n_windows {
            let (t_a, t_b) = (bounds[i - 1], bounds[i]);
            let fine_end = fine_trajectories[i - 1].end_state();
            let steps = cfg.coarse_steps_per_window;
            let g_new = coarse_endpoint(model, &next[i - 1], t_a, t_b, steps, &cfg.newton)
                .map_err(|e| window_failure(i, sweep_no, e))?;
            let g_old = coarse_endpoint(model, &current[i - 1], t_a, t_b, steps, &cfg.newton)
                .map_err(|e| window_failure(i, sweep_no, e))?;
            // The coarse terms are differenced first: when the previous and
            // updated start values of window i agree bitwise, the correction
            // is exactly zero and the boundary keeps the fine endpoint.
            let updated = match cfg.variant {
                Variant::Classic => fine_end + (&g_new - &g_old),
                Variant::Init => {
                    let correction = pp1_at(&g_new, t_b).map_err(|e| window_failure(i, sweep_no, e))?
                        * &g_new
                        - pp1_at(&g_old, t_b).map_err(|e| window_failure(i, sweep_no, e))? * &g_old;
                    let mix = pp1_at(fine_end, t_b).map_err(|e| window_failure(i, sweep_no, e))?
                        * fine_end
                        + correction;
                    project_consistentialize(model, &mix, t_b, &cfg.newton)
                        .map_err(|e| window_failure(i, sweep_no, e))?
                }
            };
            let projector = match cfg.error_components {
                ErrorComponents::All => None,
                ErrorComponents::Differential => {
                    Some(pp1_at(fine_end, t_b).map_err(|e| window_failure(i, sweep_no, e))?)
                }
            };
            let jump = jump_norm(
                &updated,
                fine_end,
                fine_end,
                cfg.rel_tol,
                cfg.abs_tol,
                projector.as_ref(),
            )
            .map_err(|e| window_failure(i, sweep_no, e))?;
            per_window.push(jump);
            next.push(updated);
        }

        let max = per_window.iter().copied().fold(0.0f64, f64::max);
        let first_unconverged = per_window.iter().position(|&v| !(v < 1.0));
        jump_history.push(JumpSweep {
            per_window,
            max,
            first_unconverged,
        });
        window_initial_values.push(next.clone());
        current = next;
        sweeps = sweep_no;
        if max < 1.0 {
            converged = true;
            break;
        }
    }

    Ok(PararealResult {
        grid: grid.clone(),
        iterations_used: sweeps,
        converged,
        window_initial_values,
        fine_trajectories,
        jump_history,
    })
}

/// Stitches the final sweep's window trajectories into one global trajectory.
///
/// At every interior boundary the stored state is the fine endpoint of the
/// earlier window, never the updated start value of the later one, so
/// algebraic components stay consistent. For models with index-2 components
/// the first fine step inside every restarted window is flagged as possibly
/// off the constraint set. A nonconverged result is stitched all the same;
/// callers should consult [`PararealResult::converged`].
pub fn finalize_trajectory(result: &PararealResult, model: &dyn DaeModel) -> Result<Trajectory> {
    let n_windows = result.grid.n_windows();
    if result.fine_trajectories.len() != n_windows {
        return Err(Error::contract(format!(
            "finalize_trajectory: result carries {} window trajectories for {n_windows} windows",
            result.fine_trajectories.len()
        )));
    }
    if n_windows == 1 {
        return Ok(result.fine_trajectories[0].clone());
    }
    let component_index = result.fine_trajectories[0].component_index.clone();
    let has_index2 = component_index
        .as_ref()
        .map(|classes| classes.iter().any(|c| *c == ComponentClass::Index2))
        .unwrap_or(false);

    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut possibly_inconsistent = Vec::new();
    for (w, traj) in result.fine_trajectories.iter().enumerate() {
        let skip = if w == 0 { 0 } else { 1 };
        for j in skip..traj.len() {
            times.push(traj.times[j]);
            states.push(traj.states[j].clone());
            possibly_inconsistent.push(has_index2 && w > 0 && j == 1);
        }
    }
    Ok(Trajectory {
        times,
        states,
        step_size: result.fine_trajectories[0].step_size,
        model_id: model.model_id(),
        component_index,
        possibly_inconsistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ToyModel;
    use nalgebra::dvector;

    fn toy_start() -> DVector<f64> {
        dvector![0.0, 0.0, 0.3 * std::f64::consts::PI]
    }

    #[test]
    fn uniform_grid_boundaries() {
        let g = make_grid(0.0, 1.0, 21).unwrap();
        assert_eq!(g.n_windows(), 21);
        assert_eq!(g.boundaries().len(), 22);
        assert_eq!(g.t0(), 0.0);
        assert_eq!(g.t_end(), 1.0);
        let dt = 1.0 / 21.0;
        for (i, w) in g.boundaries().windows(2).enumerate() {
            assert!(
                ((w[1] - w[0]) - dt).abs() < 1e-14,
                "window {i} has length {}",
                w[1] - w[0]
            );
        }

        let g = make_grid(0.0, 0.2, 15).unwrap();
        assert!((g.delta_t() - 0.2 / 15.0).abs() < 1e-18);
        assert_eq!(g.t_end(), 0.2);

        let single = make_grid(0.0, 1.0, 1).unwrap();
        assert_eq!(single.n_windows(), 1);
        assert_eq!(single.boundaries(), &[0.0, 1.0]);

        assert!(make_grid(0.0, 1.0, 0).is_err());
        assert!(make_grid(1.0, 1.0, 4).is_err());
        assert!(make_grid(1.0, 0.5, 4).is_err());
    }

    #[test]
    fn jump_norm_basic_values() {
        let a = dvector![1.0, 2.0, 3.0];
        assert_eq!(jump_norm(&a, &a, &a, 1e-4, 1e-8, None).unwrap(), 0.0);

        // One component differing by exactly abs_tol with zero weight sits on
        // the unit boundary.
        let c = dvector![1e-10];
        let r = dvector![0.0];
        let w = dvector![0.0];
        let v = jump_norm(&c, &r, &w, 5e-4, 1e-10, None).unwrap();
        assert!((v - 1.0).abs() < 1e-12, "got {v}");

        // Weights scale the denominator.
        let v = jump_norm(&c, &r, &dvector![2e-7], 5e-4, 1e-10, None).unwrap();
        assert!((v - 0.5).abs() < 1e-12, "got {v}");

        let short = dvector![1.0];
        assert!(jump_norm(&a, &short, &a, 1e-4, 1e-8, None).is_err());
        assert!(jump_norm(&a, &a, &a, -1.0, 1e-8, None).is_err());
        assert!(jump_norm(&a, &a, &a, 0.0, 0.0, None).is_err());
        let bad = dvector![f64::NAN, 0.0, 0.0];
        assert!(jump_norm(&bad, &a, &a, 1e-4, 1e-8, None).is_err());
    }

    #[test]
    fn jump_norm_projector_filters_rows() {
        let c = dvector![1.0, 100.0, -50.0];
        let r = dvector![1.0, 5.0, 7.0];
        let w = dvector![1.0, 1.0, 1.0];
        // Only the first row is active; the huge differences in the other
        // components are invisible.
        let p = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let v = jump_norm(&c, &r, &w, 1e-2, 1e-8, Some(&p)).unwrap();
        assert_eq!(v, 0.0);

        // A mixing active row sees the projected difference; n_active = 1.
        let p = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let d0 = (c[0] - r[0]) + 0.5 * (c[1] - r[1]); // 47.5
        let expect = (d0 / (1e-8 + 1e-2 * 1.0)).abs();
        let v = jump_norm(&c, &r, &w, 1e-2, 1e-8, Some(&p)).unwrap();
        assert!((v - expect).abs() < 1e-9 * expect, "got {v}, want {expect}");

        // All-zero projector measures nothing.
        let z = DMatrix::zeros(3, 3);
        assert_eq!(jump_norm(&c, &r, &w, 1e-2, 1e-8, Some(&z)).unwrap(), 0.0);

        // Mismatched projector shape is rejected.
        let bad = DMatrix::zeros(2, 3);
        assert!(jump_norm(&c, &r, &w, 1e-2, 1e-8, Some(&bad)).is_err());
    }

    #[test]
    fn config_validation_rejects_bad_setups() {
        let model = ToyModel::default();
        let x0 = toy_start();
        let grid = make_grid(0.0, 0.2, 2).unwrap(); // ΔT = 0.1

        let mut cfg = PararealConfig::new(Variant::Classic, 0.08, 5e-4, 1e-10);
        // 0.08 > ΔT/2: the all-components update needs two fine steps.
        assert!(run(&model, &x0, &grid, &cfg).is_err());
        cfg.fine_h = 0.2; // exceeds ΔT even for the restricted update
        cfg.variant = Variant::Init;
        assert!(run(&model, &x0, &grid, &cfg).is_err());

        let mut cfg = PararealConfig::new(Variant::Classic, 0.01, 5e-4, 1e-10);
        cfg.coarse_steps_per_window = 0;
        assert!(run(&model, &x0, &grid, &cfg).is_err());

        let mut cfg = PararealConfig::new(Variant::Classic, 0.01, 5e-4, 1e-10);
        cfg.max_iterations = 0;
        assert!(run(&model, &x0, &grid, &cfg).is_err());

        let cfg = PararealConfig::new(Variant::Classic, 0.01, -1.0, 1e-10);
        assert!(run(&model, &x0, &grid, &cfg).is_err());

        let cfg = PararealConfig::new(Variant::Classic, 0.01, 5e-4, 1e-10);
        let short = dvector![0.0, 0.0];
        assert!(run(&model, &short, &grid, &cfg).is_err());
    }

    #[test]
    fn single_window_run_matches_direct_integration() {
        let model = ToyModel::default();
        let x0 = toy_start();
        let grid = make_grid(0.0, 0.05, 1).unwrap();
        let cfg = PararealConfig::new(Variant::Classic, 1e-3, 5e-4, 1e-10);
        let result = run(&model, &x0, &grid, &cfg).unwrap();
        assert!(result.converged);
        assert_eq!(result.iterations_used, 1);
        assert_eq!(result.jump_history.len(), 1);
        assert_eq!(result.jump_history[0].max, 0.0);

        let direct = integrate(&model, &x0, 0.0, 0.05, 1e-3, &cfg.newton).unwrap();
        let stitched = finalize_trajectory(&result, &model).unwrap();
        assert_eq!(stitched.times, direct.times);
        assert_eq!(stitched.states, direct.states);
        assert_eq!(
            stitched.possibly_inconsistent,
            direct.possibly_inconsistent
        );
    }

    #[test]
    fn first_boundary_is_exact_after_one_sweep() {
        let model = ToyModel::default();
        let x0 = toy_start();
        let grid = make_grid(0.0, 0.168, 6).unwrap();
        let cfg = PararealConfig::new(Variant::Classic, 1e-3, 5e-4, 1e-10);
        let result = run(&model, &x0, &grid, &cfg).unwrap();

        // The coarse terms of window 1 cancel bitwise, so boundary 1 carries
        // the fine endpoint exactly from sweep 1 on.
        let bounds = grid.boundaries();
        let fine1 = integrate(&model, &x0, bounds[0], bounds[1], 1e-3, &cfg.newton).unwrap();
        for sweep in 1..result.window_initial_values.len() {
            assert_eq!(
                result.window_initial_values[sweep][1], *fine1.end_state(),
                "sweep {sweep}"
            );
        }
    }

    #[test]
    fn classic_toy_run_converges_in_three_sweeps_with_monotone_front() {
        let model = ToyModel::default();
        let x0 = toy_start();
        let grid = make_grid(0.0, 0.168, 6).unwrap();
        let cfg = PararealConfig::new(Variant::Classic, 1e-3, 5e-4, 1e-10);
        let result = run(&model, &x0, &grid, &cfg).unwrap();
        assert!(result.converged);
        assert_eq!(result.iterations_used, 3);
        assert_eq!(result.jump_history.len(), 3);
        assert!(result.jump_history[2].max < 1.0);

        // The first window failing the criterion never moves backwards.
        let mut front = 0usize;
        for sweep in &result.jump_history {
            if let Some(i) = sweep.first_unconverged {
                assert!(i >= front, "front moved from {front} back to {i}");
                front = i;
            }
        }

        // Stitched output: boundaries keep fine endpoints; restart points are
        // flagged.
        let stitched = finalize_trajectory(&result, &model).unwrap();
        assert_eq!(
            stitched.times.len(),
            169,
            "six windows of 28 fine steps each plus the initial point"
        );
        let flagged: Vec<usize> = stitched
            .possibly_inconsistent
            .iter()
            .enumerate()
            .filter_map(|(i, f)| f.then_some(i))
            .collect();
        assert_eq!(flagged, vec![29, 57, 85, 113, 141]);
    }

    #[test]
    fn consistent_seeds_converge_in_one_sweep() {
        let model = ToyModel::default();
        let x0 = toy_start();
        let grid = make_grid(0.0, 0.168, 6).unwrap();
        let cfg = PararealConfig::new(Variant::Init, 1e-3, 5e-4, 1e-10);
        let result = run(&model, &x0, &grid, &cfg).unwrap();
        assert!(result.converged);
        assert_eq!(result.iterations_used, 1);

        // Every seed satisfies both constraints at its boundary.
        let bounds = grid.boundaries();
        for (i, seed) in result.window_initial_values[0].iter().enumerate().skip(1) {
            let e = model.explicit_constraints(seed, bounds[i]).unwrap();
            let h = model.hidden_constraints(seed, bounds[i]).unwrap();
            assert!(e.norm() < 1e-9 && h.norm() < 1e-9, "seed {i}");
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let model = ToyModel::default();
        let x0 = toy_start();
        let grid = make_grid(0.0, 0.168, 6).unwrap();
        let mut cfg = PararealConfig::new(Variant::Classic, 1e-3, 5e-4, 1e-10);
        cfg.workers = Some(1);
        let serial = run(&model, &x0, &grid, &cfg).unwrap();
        cfg.workers = Some(4);
        let parallel = run(&model, &x0, &grid, &cfg).unwrap();

        assert_eq!(serial.iterations_used, parallel.iterations_used);
        assert_eq!(serial.converged, parallel.converged);
        for (a, b) in serial
            .window_initial_values
            .iter()
            .flatten()
            .zip(parallel.window_initial_values.iter().flatten())
        {
            assert_eq!(a, b);
        }
        for (a, b) in serial
            .fine_trajectories
            .iter()
            .zip(parallel.fine_trajectories.iter())
        {
            assert_eq!(a.states, b.states);
        }
    }

    #[test]
    fn exhausted_iterations_reported_not_raised() {
        let model = ToyModel::default();
        let x0 = toy_start();
        let grid = make_grid(0.0, 0.168, 6).unwrap();
        let mut cfg = PararealConfig::new(Variant::Classic, 1e-3, 1e-30, 1e-30);
        cfg.max_iterations = 2;
        let result = run(&model, &x0, &grid, &cfg).unwrap();
        assert!(!result.converged);
        assert_eq!(result.iterations_used, 2);
        assert_eq!(result.jump_history.len(), 2);
        assert_eq!(result.window_initial_values.len(), 3);
        assert!(result.jump_history[1].max >= 1.0);
        // A nonconverged result still stitches.
        let stitched = finalize_trajectory(&result, &model).unwrap();
        assert_eq!(stitched.times.len(), 169);
    }

    /// Wrapper hiding every optional hook, leaving a model the restricted
    /// update cannot consistentialize.
    struct Opaque(ToyModel);

    impl DaeModel for Opaque {
        fn n_dof(&self) -> usize {
            self.0.n_dof()
        }
        fn model_id(&self) -> String {
            "opaque".to_string()
        }
        fn eval_mass(&self, x: &DVector<f64>, t: f64) -> DMatrix<f64> {
            self.0.eval_mass(x, t)
        }
        fn eval_rhs(&self, x: &DVector<f64>, t: f64) -> DVector<f64> {
            self.0.eval_rhs(x, t)
        }
    }

    #[test]
    fn restricted_update_requires_constraint_support() {
        let model = Opaque(ToyModel::default());
        let x0 = toy_start();
        let grid = make_grid(0.0, 0.168, 6).unwrap();
        let cfg = PararealConfig::new(Variant::Init, 1e-3, 5e-4, 1e-10);
        let err = run(&model, &x0, &grid, &cfg).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("window 1"), "got: {msg}");
    }
}
