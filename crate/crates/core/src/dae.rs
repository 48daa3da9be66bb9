//! Quasilinear DAE models and the projector-based index machinery.
//!
//! A model describes `A(x,t)·x' + b(x,t) = 0`. For singular mass matrices the
//! solution manifold splits into differential components, algebraic components
//! determined directly by the constraints (index 1), and algebraic components
//! determined only through one time-differentiation of the constraints
//! (index 2). [`projector_chain`] computes the projector decomposition that
//! separates those parts at a given evaluation point, and [`classify_index`]
//! reports the differentiation index (0, 1 or 2).

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    ensure_finite, ensure_finite_vec, is_nonsingular, kernel_projector, lu_solve_matrix, svd_rank,
    DEFAULT_RANK_TOLERANCE,
};

/// Point at which matrix-chain quantities are evaluated. `y` is the
/// directional argument of the mass-matrix derivative (irrelevant for
/// constant-mass models), `x` the state and `t` the time.
#[derive(Debug, Clone)]
pub struct EvalPoint {
    pub y: DVector<f64>,
    pub x: DVector<f64>,
    pub t: f64,
}

impl EvalPoint {
    /// Evaluation point with `y = x`, the convention used throughout the
    /// solver when no better directional argument is available.
    pub fn at_state(x: DVector<f64>, t: f64) -> Self {
        EvalPoint { y: x.clone(), x, t }
    }
}

/// A quasilinear DAE `A(x,t)·x' + b(x,t) = 0`.
///
/// The kernel and range of `A` must not depend on `x`; the projector
/// machinery additionally requires them constant in `t` and rejects models
/// that declare [`DaeModel::time_varying_kernel`].
pub trait DaeModel: Send + Sync {
    /// State dimension `n`.
    fn n_dof(&self) -> usize;

    /// Stable identifier recorded in trajectory metadata.
    fn model_id(&self) -> String {
        "dae".to_string()
    }

    /// Component names used in output headers. Defaults to `x0..x{n-1}`.
    fn component_names(&self) -> Vec<String> {
        (0..self.n_dof()).map(|i| format!("x{i}")).collect()
    }

    /// Mass matrix `A(x,t)`, `n x n`.
    fn eval_mass(&self, x: &DVector<f64>, t: f64) -> DMatrix<f64>;

    /// Right-hand side `b(x,t)`, length `n`.
    fn eval_rhs(&self, x: &DVector<f64>, t: f64) -> DVector<f64>;

    /// Jacobian `∂b/∂x`. The default is a central finite difference of
    /// [`DaeModel::eval_rhs`] with step `sqrt(eps)·(1 + |x_i|)`.
    fn eval_rhs_jacobian(&self, x: &DVector<f64>, t: f64) -> DMatrix<f64> {
        fd_jacobian(|z| self.eval_rhs(z, t), x, self.n_dof())
    }

    /// Directional mass derivative `∂(A(x,t)·y)/∂x` for fixed `y`. Zero for
    /// constant-mass models, central finite difference otherwise.
    fn eval_mass_directional_jacobian(
        &self,
        y: &DVector<f64>,
        x: &DVector<f64>,
        t: f64,
    ) -> DMatrix<f64> {
        if self.constant_mass() {
            DMatrix::zeros(self.n_dof(), self.n_dof())
        } else {
            fd_jacobian(|z| self.eval_mass(z, t) * y, x, self.n_dof())
        }
    }

    /// `A(x,t)` does not depend on `x` or `t` at all.
    fn constant_mass(&self) -> bool {
        false
    }

    /// Kernel or range of `A` vary with `t`; such models are rejected by the
    /// projector chain.
    fn time_varying_kernel(&self) -> bool {
        false
    }

    /// Constant mass matrix and index-2 components entering the equations
    /// only linearly with constant coefficients. Under this structure an
    /// implicit Euler integrator recovers exactly from initial values that
    /// are inconsistent in the algebraic parts: two steps always suffice,
    /// one step if only kernel components are perturbed.
    fn linear_index2_coupling(&self) -> bool {
        false
    }

    /// The range of the level-2 kernel projector `Q1` is independent of the
    /// evaluation point, so one constant differential projector (computed at
    /// a reference point) is valid globally.
    fn constant_q1_range(&self) -> bool {
        false
    }

    /// Closed-form projector chain, if the model has one. Implementations
    /// must agree with the numeric path.
    fn analytic_projectors(
        &self,
        _y: &DVector<f64>,
        _x: &DVector<f64>,
        _t: f64,
    ) -> Option<ProjectorChain> {
        None
    }

    /// Closed-form map from an arbitrary target vector `x_hat` to the
    /// consistent state at `t` whose differential components match `x_hat`
    /// (see `init::project_consistentialize`).
    fn analytic_consistentialize(&self, _x_hat: &DVector<f64>, _t: f64) -> Option<DVector<f64>> {
        None
    }

    /// Residuals of the explicit algebraic constraints at `(x, t)`
    /// (zero vector on a consistent state).
    fn explicit_constraints(&self, _x: &DVector<f64>, _t: f64) -> Option<DVector<f64>> {
        None
    }

    /// Jacobian of [`DaeModel::explicit_constraints`]; finite-difference
    /// fallback is applied by callers when absent.
    fn explicit_constraint_jacobian(&self, _x: &DVector<f64>, _t: f64) -> Option<DMatrix<f64>> {
        None
    }

    /// Residuals of the hidden constraints (obtained from one
    /// time-differentiation of the equations defining the index-2
    /// components).
    fn hidden_constraints(&self, _x: &DVector<f64>, _t: f64) -> Option<DVector<f64>> {
        None
    }

    /// Jacobian of [`DaeModel::hidden_constraints`].
    fn hidden_constraint_jacobian(&self, _x: &DVector<f64>, _t: f64) -> Option<DMatrix<f64>> {
        None
    }
}

/// Central finite-difference Jacobian of `f` at `x` with the crate-wide step
/// convention `sqrt(eps)·(1 + |x_i|)`.
pub fn fd_jacobian<F>(f: F, x: &DVector<f64>, n_rows: usize) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let n = x.len();
    let mut jac = DMatrix::zeros(n_rows, n);
    let step_scale = f64::EPSILON.sqrt();
    let mut xp = x.clone();
    let mut xm = x.clone();
    for i in 0..n {
        let h = step_scale * (1.0 + x[i].abs());
        xp[i] = x[i] + h;
        xm[i] = x[i] - h;
        let fp = f(&xp);
        let fm = f(&xm);
        // Use the actually represented step width for best accuracy.
        let denom = xp[i] - xm[i];
        jac.set_column(i, &((fp - fm) / denom));
        xp[i] = x[i];
        xm[i] = x[i];
    }
    jac
}

/// Projector decomposition of a DAE at one evaluation point.
///
/// With `Q` a projector onto `ker A`, `P = I - Q`,
/// `B = ∂(A·y)/∂x + ∂b/∂x`, the chain is
///
/// ```text
/// A1 = A + B·Q
/// G2 = A1 + B·P·Q1
/// ```
///
/// where `Q1` is the canonical projector onto `ker A1` (it satisfies
/// `Q1·Q = 0`). `T` projects onto `range(Q·Q1)` (the index-2 directions)
/// with `T·P = 0`, and `U = I - T`. The state decomposes as
/// `x = PP1·x + (P·Q1 + Q·U)·x + T·x` into differential, index-1 and
/// index-2 parts.
#[derive(Debug, Clone)]
pub struct ProjectorChain {
    pub q: DMatrix<f64>,
    pub p: DMatrix<f64>,
    /// Directional derivative matrix `B(y,x,t)`.
    pub b: DMatrix<f64>,
    pub a1: DMatrix<f64>,
    pub q1: DMatrix<f64>,
    pub p1: DMatrix<f64>,
    pub g2: DMatrix<f64>,
    /// Projector onto the index-2 directions, `range(Q·Q1)`, with `T·P = 0`.
    pub t_proj: DMatrix<f64>,
    /// `U = I - T`.
    pub u: DMatrix<f64>,
    /// Differential projector `P·P1`.
    pub pp1: DMatrix<f64>,
    pub eval_point: EvalPoint,
    pub rank_tolerance: f64,
    /// Some rank decision during construction was ill-separated.
    pub rank_warning: bool,
}

impl ProjectorChain {
    /// Projector onto the index-1 directions, `P·Q1 + Q·U`.
    pub fn index1_projector(&self) -> DMatrix<f64> {
        &self.p * &self.q1 + &self.q * &self.u
    }
}

/// Differentiation index of a DAE (0, 1 or 2) as decided by the matrix chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DaeIndex {
    Index0 = 0,
    Index1 = 1,
    Index2 = 2,
}

impl DaeIndex {
    pub fn as_u8(self) -> u8 {
        self as u8
    }
}

/// Dominant chain part for a single state component; used to label output
/// columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ComponentClass {
    Differential,
    Index1,
    Index2,
}

/// Residual `A(x,t)·xdot + b(x,t)`.
pub fn eval_residual(
    model: &dyn DaeModel,
    x: &DVector<f64>,
    xdot: &DVector<f64>,
    t: f64,
) -> Result<DVector<f64>> {
    let n = model.n_dof();
    if x.len() != n || xdot.len() != n {
        return Err(Error::contract(format!(
            "eval_residual: expected state and derivative of length {n}, got {} and {}",
            x.len(),
            xdot.len()
        )));
    }
    let a = model.eval_mass(x, t);
    if a.shape() != (n, n) {
        return Err(Error::contract(format!(
            "eval_residual: mass matrix must be {n}x{n}, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    ensure_finite(&a, t, "mass matrix")?;
    let b = model.eval_rhs(x, t);
    if b.len() != n {
        return Err(Error::contract(format!(
            "eval_residual: rhs must have length {n}, got {}",
            b.len()
        )));
    }
    ensure_finite_vec(&b, t, "rhs")?;
    Ok(a * xdot + b)
}

/// Projector chain at `(y, x, t)`, preferring the model's analytic hook.
pub fn projector_chain(
    model: &dyn DaeModel,
    y: &DVector<f64>,
    x: &DVector<f64>,
    t: f64,
) -> Result<ProjectorChain> {
    if let Some(chain) = model.analytic_projectors(y, x, t) {
        return Ok(chain);
    }
    numeric_projector_chain(model, y, x, t, DEFAULT_RANK_TOLERANCE)
}

/// Projector chain computed numerically (SVD-based kernel projectors and LU
/// solves), bypassing any analytic hook. Used for verification and for
/// models without hooks.
pub fn numeric_projector_chain(
    model: &dyn DaeModel,
    y: &DVector<f64>,
    x: &DVector<f64>,
    t: f64,
    rank_tolerance: f64,
) -> Result<ProjectorChain> {
    let n = model.n_dof();
    if x.len() != n || y.len() != n {
        return Err(Error::contract(format!(
            "projector_chain: expected vectors of length {n}, got y: {}, x: {}",
            y.len(),
            x.len()
        )));
    }
    if model.time_varying_kernel() {
        return Err(Error::unsupported(
            "projector chain requires the kernel of the mass matrix to be constant in time",
        ));
    }
    let a = model.eval_mass(x, t);
    if a.shape() != (n, n) {
        return Err(Error::contract(format!(
            "projector_chain: mass matrix must be {n}x{n}, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    ensure_finite(&a, t, "mass matrix")?;
    let b = model.eval_mass_directional_jacobian(y, x, t) + model.eval_rhs_jacobian(x, t);
    ensure_finite(&b, t, "model jacobians")?;

    let mut warning = false;
    let kq = kernel_projector(&a, rank_tolerance)?;
    warning |= kq.unstable;
    let q = kq.projector;
    let p = DMatrix::<f64>::identity(n, n) - &q;

    // With a time-constant kernel the projector derivative term vanishes,
    // so the level-1 matrix is simply A + B·Q.
    let a1 = &a + &b * &q;
    let k1 = kernel_projector(&a1, rank_tolerance)?;
    warning |= k1.unstable;

    let (q1, g2) = if k1.nullity == 0 {
        // A1 nonsingular: no index-2 part, the chain terminates at level 1.
        (DMatrix::zeros(n, n), a1.clone())
    } else {
        let q1_tilde = k1.projector;
        let bp = &b * &p;
        let g2_tilde = &a1 + &bp * &q1_tilde;
        let g2_rank = svd_rank(&g2_tilde, rank_tolerance)?;
        warning |= g2_rank.unstable;
        if g2_rank.rank < n {
            return Err(Error::IndexMismatch {
                t,
                detail: format!(
                    "level-2 matrix is singular (rank {} of {n}): index exceeds 2 \
                     or the problem is structurally inconsistent",
                    g2_rank.rank
                ),
            });
        }
        // Canonicalize: Q1 = Q1~ · G2~^{-1} · B · P projects onto ker A1 and
        // satisfies Q1·Q = 0, independent of the choice of Q1~.
        let q1 = &q1_tilde * lu_solve_matrix(&g2_tilde, &bp)?;
        let g2 = &a1 + &bp * &q1;
        (q1, g2)
    };
    let p1 = DMatrix::<f64>::identity(n, n) - &q1;

    // T projects onto range(Q·Q1) and annihilates range(P): with V an
    // orthonormal basis of range(Q·Q1), T = V·Vᵀ·Q satisfies T² = T,
    // range(T) = range(V) and T·P = 0 (using Q·V = V).
    let qq1 = &q * &q1;
    let rr = svd_rank(&qq1, rank_tolerance)?;
    warning |= rr.unstable;
    let v = rr.range;
    let t_proj = &v * v.transpose() * &q;
    let u = DMatrix::<f64>::identity(n, n) - &t_proj;
    let pp1 = &p * &p1;

    Ok(ProjectorChain {
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
        rank_tolerance,
        rank_warning: warning,
    })
}

/// Differentiation index of the model, decided at each sample point and
/// required to agree across all of them.
pub fn classify_index(model: &dyn DaeModel, samples: &[EvalPoint]) -> Result<DaeIndex> {
    if samples.is_empty() {
        return Err(Error::contract(
            "classify_index: at least one sample point is required",
        ));
    }
    let tol = DEFAULT_RANK_TOLERANCE;
    let n = model.n_dof();
    let mut decided: Option<DaeIndex> = None;
    for (i, pt) in samples.iter().enumerate() {
        let a = model.eval_mass(&pt.x, pt.t);
        ensure_finite(&a, pt.t, "mass matrix")?;
        let idx = if is_nonsingular(&a, tol)? {
            DaeIndex::Index0
        } else {
            let b = model.eval_mass_directional_jacobian(&pt.y, &pt.x, pt.t)
                + model.eval_rhs_jacobian(&pt.x, pt.t);
            ensure_finite(&b, pt.t, "model jacobians")?;
            let kq = kernel_projector(&a, tol)?;
            let a1 = &a + &b * &kq.projector;
            if is_nonsingular(&a1, tol)? {
                DaeIndex::Index1
            } else {
                let p = DMatrix::<f64>::identity(n, n) - &kq.projector;
                let q1_tilde = kernel_projector(&a1, tol)?.projector;
                let g2_tilde = &a1 + &b * &p * q1_tilde;
                if is_nonsingular(&g2_tilde, tol)? {
                    DaeIndex::Index2
                } else {
                    return Err(Error::IndexMismatch {
                        t: pt.t,
                        detail: "chain matrices singular beyond level 2".to_string(),
                    });
                }
            }
        };
        match decided {
            None => decided = Some(idx),
            Some(prev) if prev != idx => {
                return Err(Error::NonUniformIndex(format!(
                    "sample 0 gives index {}, sample {i} gives index {}",
                    prev.as_u8(),
                    idx.as_u8()
                )));
            }
            _ => {}
        }
    }
    Ok(decided.expect("samples checked non-empty"))
}

/// Labels each state component by the chain part with the largest column
/// norm: differential (`P·P1`), index-1 (`P·Q1 + Q·U`) or index-2 (`T`).
pub fn component_classes(chain: &ProjectorChain) -> Vec<ComponentClass> {
    let i1 = chain.index1_projector();
    let n = chain.pp1.ncols();
    (0..n)
        .map(|j| {
            let d = chain.pp1.column(j).norm();
            let a1 = i1.column(j).norm();
            let a2 = chain.t_proj.column(j).norm();
            if d >= a1 && d >= a2 {
                ComponentClass::Differential
            } else if a1 >= a2 {
                ComponentClass::Index1
            } else {
                ComponentClass::Index2
            }
        })
        .collect()
}

/// Deterministic sample points for index classification: a few structured
/// states at each requested time.
pub fn default_sample_points(n: usize, times: &[f64]) -> Vec<EvalPoint> {
    let mut pts = Vec::new();
    for &t in times {
        let zero = DVector::zeros(n);
        let small = DVector::from_fn(n, |i, _| 0.1 + 0.05 * i as f64);
        let alternating = DVector::from_fn(n, |i, _| if i % 2 == 0 { 0.7 } else { -0.4 });
        for x in [zero, small, alternating] {
            pts.push(EvalPoint::at_state(x, t));
        }
    }
    pts
}
