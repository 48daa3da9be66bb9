//! Construction of consistent initial values.
//!
//! A state is consistent when a solution of the DAE passes through it: the
//! explicit algebraic constraints and the hidden constraints (one
//! time-differentiation deep) must both hold. Two routes are provided:
//!
//! - [`warmup_consistentialize`]: run two implicit Euler steps ending at the
//!   requested start time. For constant-mass models whose index-2 components
//!   enter linearly, the stepper absorbs arbitrary inconsistencies in the
//!   algebraic parts within those two steps, so the arrival state is
//!   consistent to solver tolerance (the differential components carry an
//!   `O(h)` integration offset from the guess).
//! - [`project_consistentialize`]: solve for the state that satisfies all
//!   constraints while matching a target vector in the differential
//!   components. Models can supply this map in closed form; otherwise a
//!   Newton solve on the stacked system (differential match, explicit
//!   constraints, hidden constraints) is used.

use nalgebra::{DMatrix, DVector};

use crate::dae::{fd_jacobian, projector_chain, DaeModel, ProjectorChain};
use crate::error::{Error, Result};
use crate::integrator::{euler_step, newton_solve, NewtonConfig};
use crate::linalg::{ensure_finite_vec, svd_rank};

/// Maximum number of re-linearizations of the differential projector in
/// [`project_consistentialize`] for models whose chain varies with the state.
const MAX_PROJECTOR_PASSES: usize = 4;

/// Produces a consistent state at `t0` by integrating two implicit Euler
/// steps of size `h_warm` starting from `x_guess` at `t0 - 2·h_warm`.
///
/// Requires a constant mass matrix and linearly entering index-2 components
/// (see [`DaeModel::linear_index2_coupling`]); under that structure two steps
/// are guaranteed to land on the constraint manifold regardless of how
/// inconsistent the guess is. The differential components arrive with an
/// `O(h_warm)` offset relative to the exact flow through `x_guess`, which is
/// why the warm-up window is kept short.
pub fn warmup_consistentialize(
    model: &dyn DaeModel,
    x_guess: &DVector<f64>,
    t0: f64,
    h_warm: f64,
    cfg: &NewtonConfig,
) -> Result<DVector<f64>> {
    if x_guess.len() != model.n_dof() {
        return Err(Error::contract(format!(
            "warmup_consistentialize: guess length {} does not match model dimension {}",
            x_guess.len(),
            model.n_dof()
        )));
    }
    if !(h_warm > 0.0 && h_warm.is_finite()) {
        return Err(Error::contract(format!(
            "warmup_consistentialize: warm-up step must be positive and finite, got {h_warm}"
        )));
    }
    if !(model.constant_mass() && model.linear_index2_coupling()) {
        return Err(Error::unsupported(
            "warm-up consistentialization requires a constant mass matrix and linearly \
             entering index-2 components; use project_consistentialize instead",
        ));
    }
    let x_mid = euler_step(model, x_guess, t0 - 2.0 * h_warm, h_warm, cfg)?;
    euler_step(model, &x_mid, t0 - h_warm, h_warm, cfg)
}

/// Maps an arbitrary target vector `x_hat` to the consistent state at `t`
/// whose differential components match `x_hat`.
///
/// Preference order:
/// 1. the model's closed-form [`DaeModel::analytic_consistentialize`] hook;
/// 2. a Newton solve of the stacked system
///    `[Wᵀ·(x - x_hat); explicit(x,t); hidden(x,t)] = 0`, where the columns
///    of `W` span the row space of the differential projector `P·P1`. For
///    state-dependent chains the projector is refrozen at the solution and
///    the solve repeated until it stops moving.
///
/// Errors with `Unsupported` when the model offers neither route, or when
/// the constraint counts cannot close the system.
pub fn project_consistentialize(
    model: &dyn DaeModel,
    x_hat: &DVector<f64>,
    t: f64,
    cfg: &NewtonConfig,
) -> Result<DVector<f64>> {
    let n = model.n_dof();
    if x_hat.len() != n {
        return Err(Error::contract(format!(
            "project_consistentialize: target length {} does not match model dimension {n}",
            x_hat.len()
        )));
    }
    ensure_finite_vec(x_hat, t, "consistentialization target")?;

    if let Some(x) = model.analytic_consistentialize(x_hat, t) {
        ensure_finite_vec(&x, t, "analytic consistent state")?;
        return Ok(x);
    }

    if model.explicit_constraints(x_hat, t).is_none() {
        return Err(Error::unsupported(
            "model provides neither an analytic consistent-state map nor explicit \
             constraint residuals; cannot consistentialize",
        ));
    }

    let mut z = x_hat.clone();
    let mut chain = projector_chain(model, &z, &z, t)?;
    for _pass in 0..MAX_PROJECTOR_PASSES {
        let z_new = constrained_match(model, &chain, x_hat, &z, t, cfg)?;
        let chain_new = projector_chain(model, &z_new, &z_new, t)?;
        let drift = (&chain_new.pp1 - &chain.pp1).norm();
        let scale = 1.0 + chain.pp1.norm();
        z = z_new;
        chain = chain_new;
        if drift <= 1e-9 * scale {
            return Ok(z);
        }
    }
    Err(Error::NewtonNonconvergence {
        iterations: MAX_PROJECTOR_PASSES,
        residual_norm: f64::NAN,
        best_iterate: z.iter().copied().collect(),
    })
}

/// One constrained-match solve with the differential projector frozen.
fn constrained_match(
    model: &dyn DaeModel,
    chain: &ProjectorChain,
    x_hat: &DVector<f64>,
    guess: &DVector<f64>,
    t: f64,
    cfg: &NewtonConfig,
) -> Result<DVector<f64>> {
    let n = model.n_dof();
    let rr = svd_rank(&chain.pp1, crate::linalg::DEFAULT_RANK_TOLERANCE)?;
    let w = rr.row_space; // n x r, orthonormal columns
    let r = w.ncols();

    let m_e = model
        .explicit_constraints(guess, t)
        .map(|v| v.len())
        .unwrap_or(0);
    let m_h = model
        .hidden_constraints(guess, t)
        .map(|v| v.len())
        .unwrap_or(0);
    if r + m_e + m_h != n {
        return Err(Error::unsupported(format!(
            "constraint set does not close the system: {r} differential directions + \
             {m_e} explicit + {m_h} hidden constraints != {n} unknowns"
        )));
    }

    let residual = |x: &DVector<f64>| {
        let mut f = DVector::zeros(n);
        f.rows_mut(0, r).copy_from(&(w.transpose() * (x - x_hat)));
        if m_e > 0 {
            let e = model
                .explicit_constraints(x, t)
                .expect("explicit constraints checked present");
            f.rows_mut(r, m_e).copy_from(&e);
        }
        if m_h > 0 {
            let h = model
                .hidden_constraints(x, t)
                .expect("hidden constraints checked present");
            f.rows_mut(r + m_e, m_h).copy_from(&h);
        }
        f
    };
    let jacobian = |x: &DVector<f64>| {
        let mut j = DMatrix::zeros(n, n);
        j.rows_mut(0, r).copy_from(&w.transpose());
        if m_e > 0 {
            let je = model
                .explicit_constraint_jacobian(x, t)
                .unwrap_or_else(|| {
                    fd_jacobian(
                        |y| {
                            model
                                .explicit_constraints(y, t)
                                .expect("explicit constraints checked present")
                        },
                        x,
                        m_e,
                    )
                });
            j.rows_mut(r, m_e).copy_from(&je);
        }
        if m_h > 0 {
            let jh = model.hidden_constraint_jacobian(x, t).unwrap_or_else(|| {
                fd_jacobian(
                    |y| {
                        model
                            .hidden_constraints(y, t)
                            .expect("hidden constraints checked present")
                    },
                    x,
                    m_h,
                )
            });
            j.rows_mut(r + m_e, m_h).copy_from(&jh);
        }
        j
    };
    newton_solve(residual, jacobian, guess, cfg)
}
