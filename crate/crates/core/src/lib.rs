//! Parallel-in-time (Parareal) integration of quasilinear
//! differential-algebraic equations (DAEs) up to differentiation index 2.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: rank-revealing decompositions and kernel projectors.
//! - [`dae`]: the [`dae::DaeModel`] trait, the matrix chain
//!   (`Q, P, Q1, P1, G2, T, U, PP1`) used to analyse and split index-2
//!   systems, and index classification.
//! - [`integrator`]: implicit Euler with a damped Newton corrector.
//! - [`init`]: routines that produce consistent initial values, either by a
//!   short warm-up integration or by projecting onto the constraint set.
//! - [`parareal`]: the windowed parallel-in-time driver with two update
//!   rules — the classic correction on all components and a variant that
//!   restricts the correction to the differential components and
//!   re-consistentialises each window start.
//! - [`models`]: a three-component index-2 test problem and a flux/charge
//!   modified-nodal-analysis circuit model assembled from netlists.
//! - [`cli`]: the experiment runner behind the `parareal-dae` binary.

pub use nalgebra;

pub mod cli;
pub mod dae;
pub mod error;
pub mod init;
pub mod integrator;
pub mod linalg;
pub mod models;
pub mod parareal;

pub use dae::{classify_index, projector_chain, DaeIndex, DaeModel, EvalPoint, ProjectorChain};
pub use error::{Error, Result};
pub use init::{project_consistentialize, warmup_consistentialize};
pub use integrator::{euler_step, integrate, newton_solve, NewtonConfig, Trajectory};
pub use parareal::{
    finalize_trajectory, jump_norm, make_grid, run, ErrorComponents, JumpSweep, PararealConfig,
    PararealResult, Variant, WindowGrid,
};
