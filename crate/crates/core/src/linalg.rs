//! Dense numeric substrate: spectral-radius estimation and rescaling,
//! PCA of state collections, and ridge regression.
//!
//! Matrices are `nalgebra` dynamic matrices of `f64`. Everything here is
//! deterministic: the power iteration seeds its own start vector from a
//! fixed constant, so repeated calls on the same input give the same output.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{invalid_param, Error, Result};
use crate::rng::SeedRng;

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative convergence tolerance of the spectral-radius iteration.
const SPECTRAL_TOL: f64 = 1e-10;
/// Iteration cap before falling back to a full Schur decomposition.
const SPECTRAL_MAX_ITERS: usize = 10_000;

pub(crate) fn ensure_matrix_finite(m: &Matrix, op: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(op))
    }
}

/// y ← a·x + b·y entrywise; the matrix analogue of axpy.
pub(crate) fn mat_blend(y: &mut Matrix, a: f64, x: &Matrix, b: f64) {
    y.zip_apply(x, |yv, xv| *yv = a * xv + b * *yv);
}

pub(crate) fn ensure_vector_finite(v: &Vector, op: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(op))
    }
}

/// Spectral radius of a square matrix.
///
/// Power iteration that fits the dominant two-dimensional invariant subspace:
/// from iterates v, Av, A²v it solves A²v ≈ a·Av + b·v and reads the dominant
/// eigenvalue modulus off the companion roots of λ² − aλ − b. This converges
/// for a dominant complex-conjugate pair (the generic case for dense random
/// matrices) as well as for a dominant real eigenvalue. If the iteration has
/// not stabilized after the cap, the full eigenvalue spectrum is computed
/// instead.
pub fn spectral_radius(m: &Matrix) -> Result<f64> {
    let (rows, cols) = m.shape();
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    let n = rows;
    if n == 0 {
        return Err(Error::DegenerateInput("empty matrix".into()));
    }
    if n == 1 {
        return Ok(m[(0, 0)].abs());
    }
    ensure_matrix_finite(m, "spectral_radius input")?;

    let mut rng = SeedRng::new(0x51ab1e_u64 ^ 0x9e3779b97f4a7c15);
    let mut restarts = 0;
    let mut v = rng.normal_vector(n).normalize();
    let mut rho_prev = f64::NAN;
    let mut stable = 0;

    for _ in 0..SPECTRAL_MAX_ITERS {
        let w = m * &v;
        let nw = w.norm();
        if nw <= f64::MIN_POSITIVE * n as f64 {
            // v fell into the kernel; a few fresh starts distinguish a
            // genuinely nilpotent matrix from an unlucky start vector.
            if restarts < 3 {
                restarts += 1;
                v = rng.normal_vector(n).normalize();
                continue;
            }
            return Ok(0.0);
        }
        let y = m * &w;
        let ny = y.norm();
        if ny <= f64::MIN_POSITIVE * n as f64 {
            if restarts < 3 {
                restarts += 1;
                v = rng.normal_vector(n).normalize();
                continue;
            }
            return Ok(0.0);
        }

        // Least squares y ≈ a w + b v with v unit.
        let g11 = w.dot(&w);
        let g12 = w.dot(&v);
        let r1 = w.dot(&y);
        let r2 = v.dot(&y);
        let det = g11 - g12 * g12;
        let rho = if det <= 1e-14 * g11 {
            // w parallel to v: v already an eigenvector, modulus is the gain.
            nw
        } else {
            let a = (r1 - g12 * r2) / det;
            let b = (g11 * r2 - g12 * r1) / det;
            let disc = a * a + 4.0 * b;
            if disc >= 0.0 {
                let s = disc.sqrt();
                0.5 * ((a + s).abs()).max((a - s).abs())
            } else {
                (-b).sqrt()
            }
        };

        if rho.is_finite() && (rho - rho_prev).abs() <= SPECTRAL_TOL * rho.max(f64::MIN_POSITIVE) {
            stable += 1;
            if stable >= 3 {
                return Ok(rho);
            }
        } else {
            stable = 0;
        }
        rho_prev = rho;
        v = y / ny;
    }

    // Slowly separating moduli: fall back to the exact spectrum.
    let rho = m
        .clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    Ok(rho)
}

/// Rescale a square matrix so its spectral radius equals `target`.
pub fn scale_to_spectral_radius(m: &Matrix, target: f64) -> Result<Matrix> {
    if !(target > 0.0) || !target.is_finite() {
        return Err(invalid_param(
            "target",
            format!("spectral radius target must be positive and finite, got {target}"),
        ));
    }
    let rho = spectral_radius(m)?;
    if rho < 1e-300 {
        return Err(Error::ZeroSpectralRadius);
    }
    let scaled = m * (target / rho);
    ensure_matrix_finite(&scaled, "scale_to_spectral_radius")?;
    Ok(scaled)
}

/// Principal component analysis of a sample collection.
#[derive(Debug, Clone)]
pub struct PcaResult {
    /// Orthonormal basis, one component per column, variance-ordered.
    pub components: Matrix,
    /// Per-component sample variance, nonincreasing.
    pub variances: Vector,
    /// Per-channel mean of the input rows.
    pub mean: Vector,
}

/// PCA of `samples` (one sample per row, one channel per column) via the
/// eigen-decomposition of the sample covariance matrix.
pub fn pca(samples: &Matrix) -> Result<PcaResult> {
    let l = samples.nrows();
    let n = samples.ncols();
    if l < 2 {
        return Err(Error::DegenerateInput(format!(
            "PCA needs at least 2 samples, got {l}"
        )));
    }
    ensure_matrix_finite(samples, "pca input")?;

    let mean: Vector = Vector::from_fn(n, |j, _| samples.column(j).sum() / l as f64);
    let mut centered = samples.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let cov = centered.transpose() * &centered / (l as f64 - 1.0);

    let eig = cov.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut components = Matrix::zeros(n, n);
    let mut variances = Vector::zeros(n);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        // Fix the sign so the largest-magnitude entry is positive.
        let pivot = col
            .iter()
            .cloned()
            .fold(0.0_f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        components.set_column(dst, &(col * sign));
        variances[dst] = eig.eigenvalues[src].max(0.0);
    }

    Ok(PcaResult {
        components,
        variances,
        mean,
    })
}

/// Ridge regression `W = Y Xᵀ (X Xᵀ + reg·I)⁻¹`.
///
/// `x` holds one observation per column (features down the rows) and `y` the
/// matching targets. The symmetric system is solved by Cholesky
/// factorization rather than explicit inversion.
pub fn ridge_solve(x: &Matrix, y: &Matrix, reg: f64) -> Result<Matrix> {
    if x.ncols() != y.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "ridge_solve: {} state columns vs {} target columns",
            x.ncols(),
            y.ncols()
        )));
    }
    if x.ncols() == 0 {
        return Err(Error::DegenerateInput("ridge_solve: no observations".into()));
    }
    if !(reg >= 0.0) || !reg.is_finite() {
        return Err(invalid_param(
            "reg",
            format!("ridge regularization must be finite and >= 0, got {reg}"),
        ));
    }

    let n = x.nrows();
    let mut a = x * x.transpose();
    for i in 0..n {
        a[(i, i)] += reg;
    }
    let b = x * y.transpose();
    let chol = Cholesky::new(a).ok_or(Error::SingularSystem { reg })?;
    let w = chol.solve(&b).transpose();
    ensure_matrix_finite(&w, "ridge_solve")?;
    Ok(w)
}
