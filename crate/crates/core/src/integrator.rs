//! Damped Newton iteration and the implicit Euler integrator.

use nalgebra::{DMatrix, DVector};

use crate::dae::{component_classes, projector_chain, ComponentClass, DaeModel};
use crate::error::{Error, Result};
use crate::linalg::lu_solve;

/// Settings for the damped Newton iteration.
#[derive(Debug, Clone, Copy)]
pub struct NewtonConfig {
    /// Absolute tolerance on the residual 2-norm.
    pub abs_tol: f64,
    /// Relative tolerance on the step norm: convergence when
    /// `‖Δx‖ ≤ rel_tol·(1 + ‖x‖)`.
    pub rel_tol: f64,
    pub max_iterations: usize,
    /// Maximum number of step halvings when a full step increases the
    /// residual norm.
    pub damping: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            abs_tol: 1e-10,
            rel_tol: 1e-12,
            max_iterations: 50,
            damping: 8,
        }
    }
}

/// Solves `residual(x) = 0` by Newton's method with step halving.
///
/// Exit tests, in order, per iteration: residual 2-norm `≤ abs_tol` (checked
/// before stepping, so an exact guess returns in zero iterations), then after
/// each accepted step `‖Δx‖ ≤ rel_tol·(1 + ‖x‖)`.
pub fn newton_solve<R, J>(
    residual: R,
    jacobian: J,
    guess: &DVector<f64>,
    cfg: &NewtonConfig,
) -> Result<DVector<f64>>
where
    R: Fn(&DVector<f64>) -> DVector<f64>,
    J: Fn(&DVector<f64>) -> DMatrix<f64>,
{
    let mut x = guess.clone();
    let mut r = residual(&x);
    if !r.iter().all(|v| v.is_finite()) {
        return Err(Error::Evaluation {
            t: f64::NAN,
            context: "newton residual at initial guess".to_string(),
        });
    }
    let mut r_norm = r.norm();
    let mut best = (x.clone(), r_norm);

    for _iter in 0..cfg.max_iterations {
        if r_norm <= cfg.abs_tol {
            return Ok(x);
        }
        let jac = jacobian(&x);
        let full_step = lu_solve(&jac, &r)?;
        // Try the full step, halving up to `damping` times while the
        // residual norm increases; keep the last attempted step otherwise.
        let mut scale = 1.0;
        let mut x_next = &x - &full_step * scale;
        let mut r_next = residual(&x_next);
        let mut r_next_norm = vec_norm_checked(&r_next)?;
        for _ in 0..cfg.damping {
            if r_next_norm <= r_norm {
                break;
            }
            scale *= 0.5;
            x_next = &x - &full_step * scale;
            r_next = residual(&x_next);
            r_next_norm = vec_norm_checked(&r_next)?;
        }
        let step_norm = full_step.norm() * scale;
        x = x_next;
        r = r_next;
        r_norm = r_next_norm;
        if r_norm < best.1 {
            best = (x.clone(), r_norm);
        }
        if r_norm <= cfg.abs_tol || step_norm <= cfg.rel_tol * (1.0 + x.norm()) {
            return Ok(x);
        }
    }
    Err(Error::NewtonNonconvergence {
        iterations: cfg.max_iterations,
        residual_norm: best.1,
        best_iterate: best.0.iter().cloned().collect(),
    })
}

fn vec_norm_checked(v: &DVector<f64>) -> Result<f64> {
    let n = v.norm();
    if n.is_finite() {
        Ok(n)
    } else {
        Err(Error::Evaluation {
            t: f64::NAN,
            context: "newton residual".to_string(),
        })
    }
}

/// One implicit Euler step: solves
/// `A(x1, t1)·(x1 - x0)/h + b(x1, t1) = 0` for `x1` at `t1 = t0 + h`,
/// starting the Newton iteration from `x0`.
pub fn euler_step(
    model: &dyn DaeModel,
    x0: &DVector<f64>,
    t0: f64,
    h: f64,
    cfg: &NewtonConfig,
) -> Result<DVector<f64>> {
    if !(h > 0.0) {
        return Err(Error::contract(format!(
            "euler_step: step size must be positive, got {h}"
        )));
    }
    if x0.len() != model.n_dof() {
        return Err(Error::contract(format!(
            "euler_step: state length {} does not match model dimension {}",
            x0.len(),
            model.n_dof()
        )));
    }
    let t1 = t0 + h;
    let residual = |x: &DVector<f64>| model.eval_mass(x, t1) * ((x - x0) / h) + model.eval_rhs(x, t1);
    let jacobian = |x: &DVector<f64>| {
        let dxdt = (x - x0) / h;
        model.eval_mass(x, t1) / h
            + model.eval_mass_directional_jacobian(&dxdt, x, t1)
            + model.eval_rhs_jacobian(x, t1)
    };
    newton_solve(residual, jacobian, x0, cfg)
}

/// Fixed-step trajectory. `times` is strictly increasing with uniform spacing
/// `step_size` except that the final step may be shortened to land on the
/// requested end time exactly.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    /// Nominal step size.
    pub step_size: f64,
    /// Identifier of the generating model.
    pub model_id: String,
    /// Per-component index classification, when the generating model's chain
    /// was available.
    pub component_index: Option<Vec<ComponentClass>>,
    /// Per-point flag marking states that may sit off the constraint
    /// manifold (the first step after a restart from an updated initial
    /// value). Empty when not applicable.
    pub possibly_inconsistent: Vec<bool>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn end_state(&self) -> &DVector<f64> {
        self.states.last().expect("trajectory has at least one point")
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least one point")
    }
}

/// Integrates the model from `(t0, x0)` to `t_end` with implicit Euler steps
/// of size `h`; `(t_end - t0)/h` must be within half a step of an integer and
/// the final step is shortened to land on `t_end` exactly.
pub fn integrate(
    model: &dyn DaeModel,
    x0: &DVector<f64>,
    t0: f64,
    t_end: f64,
    h: f64,
    cfg: &NewtonConfig,
) -> Result<Trajectory> {
    if x0.len() != model.n_dof() {
        return Err(Error::contract(format!(
            "integrate: state length {} does not match model dimension {}",
            x0.len(),
            model.n_dof()
        )));
    }
    if t_end < t0 {
        return Err(Error::contract(format!(
            "integrate: reversed interval [{t0}, {t_end}]"
        )));
    }
    if !(h > 0.0) {
        return Err(Error::contract(format!(
            "integrate: step size must be positive, got {h}"
        )));
    }
    let span = t_end - t0;
    let steps_float = span / h;
    let n_steps = steps_float.round() as usize;
    if (steps_float - n_steps as f64).abs() > 0.5 {
        return Err(Error::contract(format!(
            "integrate: interval of {steps_float:.3} steps is not within half a step of an integer"
        )));
    }

    let mut times = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    times.push(t0);
    states.push(x0.clone());

    for i in 0..n_steps {
        let t_prev = times[i];
        let t_next = if i + 1 == n_steps {
            t_end
        } else {
            t0 + (i + 1) as f64 * h
        };
        let step = t_next - t_prev;
        let x_next =
            euler_step(model, &states[i], t_prev, step, cfg).map_err(|e| Error::StepFailure {
                step_index: i,
                t: t_prev,
                h: step,
                source: Box::new(e),
            })?;
        times.push(t_next);
        states.push(x_next);
    }

    let component_index = projector_chain(model, x0, x0, t0)
        .ok()
        .map(|chain| component_classes(&chain));
    Ok(Trajectory {
        times,
        states,
        step_size: h,
        model_id: model.model_id(),
        component_index,
        possibly_inconsistent: Vec::new(),
    })
}
