//! A small index-2 test problem with a smooth compactly-activated nonlinearity.
//!
//! The system has three unknowns `(x0, x1, x2)` and reads
//!
//! ```text
//! x0' + g(x2)            = 0
//! x1'           - x2     = 0
//! x1 - a·sin(ω t)        = 0
//! ```
//!
//! The third equation pins `x1` to a sinusoidal drive, the second forces
//! `x2 = x1'` (a hidden constraint obtained by differentiation), and the
//! first integrates the nonlinear feed-through `g(x2)`. Because `x2` is only
//! determined after one differentiation of the constraint, the system has
//! differentiation index 2. On the exact solution `x2 = a·ω·cos(ω t)` stays
//! well inside the region where `g` vanishes, so the exact solution is
//! `x0 ≡ 0`, while restarts from inconsistent states can push `x2` into the
//! active region of `g` and produce spurious `x0` transients.

use nalgebra::{DMatrix, DVector};

use crate::dae::{DaeModel, EvalPoint, ProjectorChain};

/// Amplitude of the sinusoidal drive applied to `x1`.
pub const DRIVE_AMPLITUDE: f64 = 0.015;
/// Angular frequency of the sinusoidal drive (10 Hz).
pub const DRIVE_ANGULAR_FREQUENCY: f64 = 20.0 * std::f64::consts::PI;

/// Nonlinear feed-through used in the first equation.
///
/// `g` is identically zero for `x <= 1`, ramps up as the smooth bump
/// `exp(-1/(x-1)^2)` on `(1, 2]`, and for `x > 2` the bump continues but is
/// bent downward by subtracting `(1/8)·e^{3/4}·exp(-1/(x-2)^2)`. Every
/// correction term switches on with all derivatives vanishing at the joint,
/// so `g` is C-infinity.
pub fn g(x: f64) -> f64 {
    if x <= 1.0 {
        0.0
    } else if x <= 2.0 {
        let d = x - 1.0;
        (-1.0 / (d * d)).exp()
    } else {
        let d1 = x - 1.0;
        let d2 = x - 2.0;
        (-1.0 / (d1 * d1)).exp() - 0.125 * (0.75f64).exp() * (-1.0 / (d2 * d2)).exp()
    }
}

/// Derivative of [`g`].
pub fn g_prime(x: f64) -> f64 {
    if x <= 1.0 {
        0.0
    } else if x <= 2.0 {
        let d = x - 1.0;
        (-1.0 / (d * d)).exp() * 2.0 / (d * d * d)
    } else {
        let d1 = x - 1.0;
        let d2 = x - 2.0;
        (-1.0 / (d1 * d1)).exp() * 2.0 / (d1 * d1 * d1)
            - 0.125 * (0.75f64).exp() * (-1.0 / (d2 * d2)).exp() * 2.0 / (d2 * d2 * d2)
    }
}

/// The three-component index-2 test model described in the module docs.
#[derive(Debug, Clone, Default)]
pub struct ToyModel;

impl ToyModel {
    pub fn new() -> Self {
        ToyModel
    }

    /// Value the drive constraint forces on `x1` at time `t`.
    pub fn drive(t: f64) -> f64 {
        DRIVE_AMPLITUDE * (DRIVE_ANGULAR_FREQUENCY * t).sin()
    }

    /// Time derivative of the drive; the hidden constraint forces `x2` to it.
    pub fn drive_rate(t: f64) -> f64 {
        DRIVE_AMPLITUDE * DRIVE_ANGULAR_FREQUENCY * (DRIVE_ANGULAR_FREQUENCY * t).cos()
    }

    /// Exact solution through the consistent initial value at `t = 0`.
    pub fn exact_solution(t: f64) -> DVector<f64> {
        DVector::from_vec(vec![0.0, Self::drive(t), Self::drive_rate(t)])
    }
}

impl DaeModel for ToyModel {
    fn n_dof(&self) -> usize {
        3
    }

    fn model_id(&self) -> String {
        "toy".to_string()
    }

    fn component_names(&self) -> Vec<String> {
        vec!["x0".into(), "x1".into(), "x2".into()]
    }

    fn eval_mass(&self, _x: &DVector<f64>, _t: f64) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 0.0]))
    }

    fn eval_rhs(&self, x: &DVector<f64>, t: f64) -> DVector<f64> {
        DVector::from_vec(vec![g(x[2]), -x[2], x[1] - Self::drive(t)])
    }

    fn eval_rhs_jacobian(&self, x: &DVector<f64>, _t: f64) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(3, 3);
        j[(0, 2)] = g_prime(x[2]);
        j[(1, 2)] = -1.0;
        j[(2, 1)] = 1.0;
        j
    }

    fn constant_mass(&self) -> bool {
        true
    }

    fn analytic_projectors(
        &self,
        y: &DVector<f64>,
        x: &DVector<f64>,
        t: f64,
    ) -> Option<ProjectorChain> {
        let gp = g_prime(x[2]);
        let q = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 0.0, 1.0]));
        let p = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 0.0]));
        let b = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, gp, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0]);
        let a1 = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, gp, 0.0, 1.0, -1.0, 0.0, 0.0, 0.0]);
        let q1 = DMatrix::from_row_slice(3, 3, &[0.0, -gp, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0]);
        let p1 = DMatrix::from_row_slice(3, 3, &[1.0, gp, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 1.0]);
        let g2 = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, gp, 0.0, 1.0, -1.0, 0.0, 1.0, 0.0]);
        let t_proj = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 0.0, 1.0]));
        let u = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 0.0]));
        let pp1 = DMatrix::from_row_slice(3, 3, &[1.0, gp, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        Some(ProjectorChain {
            q,
            p,
            b,
            a1,
            q1,
            p1,
            g2,
            t_proj,
            u,
            pp1,
            eval_point: EvalPoint {
                y: y.clone(),
                x: x.clone(),
                t,
            },
            rank_tolerance: 0.0,
            rank_warning: false,
        })
    }

    fn analytic_consistentialize(&self, x_hat: &DVector<f64>, t: f64) -> Option<DVector<f64>> {
        let x2 = Self::drive_rate(t);
        let x1 = Self::drive(t);
        let x0 = x_hat[0] + g_prime(x2) * (x_hat[1] - x1);
        Some(DVector::from_vec(vec![x0, x1, x2]))
    }

    fn explicit_constraints(&self, x: &DVector<f64>, t: f64) -> Option<DVector<f64>> {
        Some(DVector::from_vec(vec![x[1] - Self::drive(t)]))
    }

    fn explicit_constraint_jacobian(&self, _x: &DVector<f64>, _t: f64) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_row_slice(1, 3, &[0.0, 1.0, 0.0]))
    }

    fn hidden_constraints(&self, x: &DVector<f64>, t: f64) -> Option<DVector<f64>> {
        Some(DVector::from_vec(vec![x[2] - Self::drive_rate(t)]))
    }

    fn hidden_constraint_jacobian(&self, _x: &DVector<f64>, _t: f64) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_row_slice(1, 3, &[0.0, 0.0, 1.0]))
    }
}
