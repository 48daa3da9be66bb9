//! Dense linear-algebra helpers: rank-revealing decisions via SVD and
//! partial-pivot LU solves.
//!
//! Every rank decision in this crate goes through [`svd_rank`] so that the
//! same relative tolerance (scaled by the largest singular value) is applied
//! uniformly.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default relative rank tolerance: singular values below
/// `DEFAULT_RANK_TOLERANCE * sigma_max` are treated as zero.
pub const DEFAULT_RANK_TOLERANCE: f64 = 1e-12;

/// Outcome of a rank-revealing factorization.
pub struct RankRevealed {
    /// Numerical rank.
    pub rank: usize,
    /// Orthonormal basis of the range (first `rank` left singular vectors).
    pub range: DMatrix<f64>,
    /// Orthonormal basis of the row space (first `rank` right singular vectors).
    pub row_space: DMatrix<f64>,
    /// Orthonormal basis of the kernel (remaining right singular vectors).
    pub kernel: DMatrix<f64>,
    /// Orthonormal basis of the cokernel, i.e. kernel of the transpose.
    pub cokernel: DMatrix<f64>,
    /// True when a singular value fell within a factor 10 of the cut-off,
    /// making the rank decision ill-separated.
    pub unstable: bool,
}

/// Checks all entries for finiteness; `context` names the offending matrix.
pub fn ensure_finite(m: &DMatrix<f64>, t: f64, context: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Evaluation {
            t,
            context: context.to_string(),
        })
    }
}

/// Like [`ensure_finite`] for vectors.
pub fn ensure_finite_vec(v: &DVector<f64>, t: f64, context: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Evaluation {
            t,
            context: context.to_string(),
        })
    }
}

/// Full singular value decomposition `m = U·diag(σ)·Vᵀ` with square
/// orthogonal `U` (rows×rows) and `V` (cols×cols), `σ` nonincreasing.
///
/// Backed by `faer`; the full factors make kernel and cokernel bases
/// available as trailing singular vectors, orthonormal by construction.
fn full_svd(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    let (rows, cols) = m.shape();
    let fm = faer::Mat::<f64>::from_fn(rows, cols, |i, j| m[(i, j)]);
    let svd = fm.svd().map_err(|_| {
        Error::LinearSolve(format!(
            "{rows}x{cols} singular value decomposition did not converge"
        ))
    })?;
    let sv = svd.S().column_vector();
    let sigma: Vec<f64> = (0..rows.min(cols)).map(|i| sv[i]).collect();
    let u = DMatrix::from_fn(rows, rows, |i, j| svd.U()[(i, j)]);
    let v = DMatrix::from_fn(cols, cols, |i, j| svd.V()[(i, j)]);
    Ok((u, sigma, v))
}

/// Rank-revealing SVD with the crate-wide relative tolerance convention.
pub fn svd_rank(m: &DMatrix<f64>, rank_tolerance: f64) -> Result<RankRevealed> {
    ensure_finite(m, f64::NAN, "svd input")
        .map_err(|_| Error::contract("svd_rank: input contains non-finite entries"))?;
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Ok(RankRevealed {
            rank: 0,
            range: DMatrix::zeros(rows, 0),
            row_space: DMatrix::zeros(cols, 0),
            kernel: DMatrix::identity(cols, cols),
            cokernel: DMatrix::identity(rows, rows),
            unstable: false,
        });
    }
    let (u, sigma, v) = full_svd(m)?;
    let sigma_max = sigma.iter().cloned().fold(0.0f64, f64::max);
    let threshold = rank_tolerance * sigma_max;
    let rank = if sigma_max == 0.0 {
        0
    } else {
        sigma.iter().filter(|&&s| s > threshold).count()
    };
    // A singular value within a factor 10 of the cut-off on either side means
    // the rank decision is poorly separated.
    let unstable = sigma_max > 0.0
        && sigma
            .iter()
            .any(|&s| s > threshold / 10.0 && s <= threshold * 10.0);

    Ok(RankRevealed {
        rank,
        range: u.columns(0, rank).into_owned(),
        row_space: v.columns(0, rank).into_owned(),
        kernel: v.columns(rank, cols - rank).into_owned(),
        cokernel: u.columns(rank, rows - rank).into_owned(),
        unstable,
    })
}

/// Result of [`kernel_projector`].
pub struct KernelProjector {
    /// Orthogonal projector onto the kernel of the input matrix.
    pub projector: DMatrix<f64>,
    /// Numerical rank of the input matrix.
    pub matrix_rank: usize,
    /// Dimension of the kernel (= projector rank).
    pub nullity: usize,
    /// Rank decision was ill-separated; see [`RankRevealed::unstable`].
    pub unstable: bool,
}

/// Orthogonal projector `Q` onto the kernel of a square matrix:
/// `Q * Q = Q`, `range(Q) = kernel(m)`, `rank(Q) = n - rank(m)`.
pub fn kernel_projector(m: &DMatrix<f64>, rank_tolerance: f64) -> Result<KernelProjector> {
    if !m.is_square() {
        return Err(Error::contract(format!(
            "kernel_projector: expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if !m.iter().all(|v| v.is_finite()) {
        return Err(Error::Evaluation {
            t: f64::NAN,
            context: "kernel_projector: input contains non-finite entries".to_string(),
        });
    }
    let rr = svd_rank(m, rank_tolerance)?;
    let projector = &rr.kernel * rr.kernel.transpose();
    Ok(KernelProjector {
        projector,
        matrix_rank: rr.rank,
        nullity: m.nrows() - rr.rank,
        unstable: rr.unstable,
    })
}

/// True when the square matrix has full numerical rank.
pub fn is_nonsingular(m: &DMatrix<f64>, rank_tolerance: f64) -> Result<bool> {
    Ok(svd_rank(m, rank_tolerance)?.rank == m.nrows())
}

/// Solves `m * x = rhs` by partial-pivot LU.
pub fn lu_solve(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    m.clone()
        .lu()
        .solve(rhs)
        .ok_or_else(|| Error::LinearSolve(format!("singular {}x{} system", m.nrows(), m.ncols())))
}

/// Solves `m * X = rhs` for a matrix right-hand side.
pub fn lu_solve_matrix(m: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.clone()
        .lu()
        .solve(rhs)
        .ok_or_else(|| Error::LinearSolve(format!("singular {}x{} system", m.nrows(), m.ncols())))
}

/// Largest principal angle (radians) between the column spans of two
/// orthonormal bases. Zero means identical subspaces.
pub fn max_principal_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    if a.ncols() != b.ncols() {
        return std::f64::consts::FRAC_PI_2;
    }
    if a.ncols() == 0 {
        return 0.0;
    }
    let m = a.transpose() * b;
    let sigma_min = match full_svd(&m) {
        Ok((_, sigma, _)) => sigma.iter().cloned().fold(f64::INFINITY, f64::min),
        Err(_) => return std::f64::consts::FRAC_PI_2,
    };
    sigma_min.clamp(-1.0, 1.0).acos()
}
