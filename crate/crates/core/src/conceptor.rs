//! Matrix conceptors and their adaptation loops.
//!
//! A conceptor summarizes the ellipsoid occupied by a driven state cloud:
//! C = R(R + γ⁻²I)⁻¹ with R the state correlation matrix. Its eigenvalues
//! are s/(s + γ⁻²) for eigenvalues s of R, so C is symmetric PSD with
//! spectrum in [0, 1). Applied multiplicatively inside the state update it
//! softly projects the dynamics onto the recorded subspace.
//!
//! Three adaptive forms build on the batch construction:
//! - the autoconceptor, a per-step stochastic-gradient estimate;
//! - the control loop (CCL), which pulls the running estimate toward a
//!   target with gain β and applies the pulled version to the dynamics;
//! - the merged variant, folding estimate and pull into one matrix.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{invalid_param, Error, Result};
use crate::linalg::{ensure_matrix_finite, mat_blend, Matrix, Vector};
use crate::reservoir::{drive_step_mut, ReservoirParams, ReservoirState};

/// Soft projection matrix with the aperture it was computed at.
#[derive(Debug, Clone, PartialEq)]
pub struct Conceptor {
    pub mat: Matrix,
    /// Aperture γ > 0; γ → 0 closes all directions, γ → ∞ admits all.
    pub aperture: f64,
}

impl Conceptor {
    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Largest absolute asymmetry, should stay at rounding level.
    pub fn asymmetry(&self) -> f64 {
        let n = self.mat.nrows();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i + 1..n {
                worst = worst.max((self.mat[(i, j)] - self.mat[(j, i)]).abs());
            }
        }
        worst
    }
}

/// Parameters of the conceptor control loop.
#[derive(Debug, Clone)]
pub struct CclParams {
    /// Autoconceptor learning rate η > 0.
    pub eta: f64,
    /// Pull strength β ≥ 0 toward the target.
    pub beta: f64,
    /// Aperture γ > 0 used by the decay term.
    pub gamma: f64,
    pub target: Conceptor,
}

impl CclParams {
    pub fn new(eta: f64, beta: f64, gamma: f64, target: Conceptor) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(invalid_param(
                "eta",
                format!("learning rate must be positive and finite, got {eta}"),
            ));
        }
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(invalid_param(
                "beta",
                format!("control gain must be finite and >= 0, got {beta}"),
            ));
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidAperture(gamma));
        }
        Ok(Self {
            eta,
            beta,
            gamma,
            target,
        })
    }
}

/// λ(k) = min(1, rate·k) ramp between two endpoint conceptors.
#[derive(Debug, Clone)]
pub struct InterpolationSchedule {
    pub c0: Conceptor,
    pub c1: Conceptor,
    /// Per-step λ increment; 1e-5 reaches λ=1 after 100 000 steps.
    pub rate: f64,
}

impl InterpolationSchedule {
    pub fn new(c0: Conceptor, c1: Conceptor, rate: f64) -> Result<Self> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(invalid_param(
                "rate",
                format!("ramp rate must be finite and >= 0, got {rate}"),
            ));
        }
        check_pair(&c0, &c1)?;
        Ok(Self { c0, c1, rate })
    }

    pub fn lambda_of_k(&self, k: usize) -> f64 {
        (self.rate * k as f64).min(1.0)
    }

    pub fn target_at(&self, k: usize) -> Result<Conceptor> {
        interpolate_conceptors(&self.c0, &self.c1, self.lambda_of_k(k))
    }

    /// In-place blend into `out`, for per-step use without allocation.
    pub fn target_at_into(&self, k: usize, out: &mut Conceptor) {
        let lambda = self.lambda_of_k(k);
        out.mat.copy_from(&self.c0.mat);
        mat_blend(&mut out.mat, lambda, &self.c1.mat, 1.0 - lambda);
        out.aperture = self.c0.aperture;
    }
}

/// Batch conceptor of a state collection: R = states·statesᵀ/L, then
/// C = R(R + γ⁻²I)⁻¹ computed through the eigen-decomposition of R, which
/// keeps the spectrum exactly within [0, 1).
pub fn conceptor_from_states(states: &Matrix, gamma: f64) -> Result<Conceptor> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidAperture(gamma));
    }
    if states.ncols() == 0 {
        return Err(Error::DegenerateInput("no state columns".into()));
    }
    ensure_matrix_finite(states, "conceptor_from_states")?;

    let l = states.ncols() as f64;
    let r = states * states.transpose() / l;
    let inv_g2 = gamma.powi(-2);

    let eig = r.symmetric_eigen();
    let n = states.nrows();
    // C = V diag(s/(s+γ⁻²)) Vᵀ; tiny negative s from rounding clips to 0.
    let mut scaled = eig.eigenvectors.clone();
    for j in 0..n {
        let s = eig.eigenvalues[j].max(0.0);
        let c = s / (s + inv_g2);
        scaled.column_mut(j).scale_mut(c);
    }
    let mut mat = scaled * eig.eigenvectors.transpose();
    symmetrize(&mut mat);
    Ok(Conceptor {
        mat,
        aperture: gamma,
    })
}

fn symmetrize(m: &mut Matrix) {
    let n = m.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Driven update with the conceptor applied:
/// x(k+1) = C[(1−α)x(k) + α·tanh(W x(k) + W_in u(k) + b)].
pub fn constrained_step(
    p: &ReservoirParams,
    s: &ReservoirState,
    u: &Vector,
    c: &Conceptor,
) -> Result<ReservoirState> {
    let mut next = s.clone();
    constrained_step_mut(p, &mut next, u, c)?;
    Ok(next)
}

pub fn constrained_step_mut(
    p: &ReservoirParams,
    s: &mut ReservoirState,
    u: &Vector,
    c: &Conceptor,
) -> Result<()> {
    if c.mat.nrows() != p.n || c.mat.ncols() != p.n {
        return Err(Error::DimensionMismatch(format!(
            "conceptor is {}x{} for an N={} reservoir",
            c.mat.nrows(),
            c.mat.ncols(),
            p.n
        )));
    }
    drive_step_mut(p, s, u)?;
    let projected = &c.mat * &s.x;
    s.x.copy_from(&projected);
    Ok(())
}

/// One stochastic-gradient update C += η((x − Cx)xᵀ − γ⁻²C), re-symmetrized.
pub fn autoconceptor_step(c: &Conceptor, x: &Vector, eta: f64, gamma: f64) -> Result<Conceptor> {
    let mut next = c.clone();
    next.aperture = gamma;
    autoconceptor_step_mut(&mut next, x, eta)?;
    Ok(next)
}

/// In-place form; the aperture stored on `c` supplies γ.
pub fn autoconceptor_step_mut(c: &mut Conceptor, x: &Vector, eta: f64) -> Result<()> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(invalid_param(
            "eta",
            format!("learning rate must be positive and finite, got {eta}"),
        ));
    }
    if !(c.aperture > 0.0) || !c.aperture.is_finite() {
        return Err(Error::InvalidAperture(c.aperture));
    }
    if x.len() != c.mat.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "state has {} entries for a {}-dim conceptor",
            x.len(),
            c.mat.nrows()
        )));
    }
    let inv_g2 = c.aperture.powi(-2);
    let d = x - &c.mat * x;
    c.mat *= 1.0 - eta * inv_g2;
    c.mat.ger(eta, &d, x, 1.0);
    symmetrize(&mut c.mat);
    Ok(())
}

/// One control-loop step: the running estimate takes an autoconceptor
/// update, then the applied conceptor is pulled toward the target,
/// c_adapt = c_next − β(c_next − C_target). Returns (c_next, c_adapt);
/// the caller applies c_adapt to the dynamics and carries c_next forward.
pub fn ccl_step(c: &Conceptor, x: &Vector, params: &CclParams) -> Result<(Conceptor, Conceptor)> {
    let mut c_next = c.clone();
    c_next.aperture = params.gamma;
    let mut c_adapt = Conceptor {
        mat: Matrix::zeros(c.mat.nrows(), c.mat.ncols()),
        aperture: params.gamma,
    };
    ccl_step_mut(&mut c_next, &mut c_adapt, x, params)?;
    Ok((c_next, c_adapt))
}

/// In-place form: `c` becomes c_next, `c_adapt` is overwritten.
pub fn ccl_step_mut(
    c: &mut Conceptor,
    c_adapt: &mut Conceptor,
    x: &Vector,
    params: &CclParams,
) -> Result<()> {
    autoconceptor_step_mut(c, x, params.eta)?;
    if params.target.mat.nrows() != c.mat.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "target conceptor is {}-dim, estimate is {}-dim",
            params.target.mat.nrows(),
            c.mat.nrows()
        )));
    }
    // c_adapt = (1−β)·c_next + β·target.
    c_adapt.mat.copy_from(&c.mat);
    mat_blend(
        &mut c_adapt.mat,
        params.beta,
        &params.target.mat,
        1.0 - params.beta,
    );
    c_adapt.aperture = params.gamma;
    Ok(())
}

/// Merged single-conceptor control loop:
/// C ← C + η((x − Cx)xᵀ − γ⁻²C) − β(C − C_target), re-symmetrized.
pub fn merged_ccl_step(c_adapt: &Conceptor, x: &Vector, params: &CclParams) -> Result<Conceptor> {
    let mut next = c_adapt.clone();
    next.aperture = params.gamma;
    merged_ccl_step_mut(&mut next, x, params)?;
    Ok(next)
}

pub fn merged_ccl_step_mut(c: &mut Conceptor, x: &Vector, params: &CclParams) -> Result<()> {
    if x.len() != c.mat.nrows() || params.target.mat.nrows() != c.mat.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "merged CCL dims: state {}, estimate {}, target {}",
            x.len(),
            c.mat.nrows(),
            params.target.mat.nrows()
        )));
    }
    let inv_g2 = params.gamma.powi(-2);
    let d = x - &c.mat * x;
    c.mat *= 1.0 - params.eta * inv_g2 - params.beta;
    c.mat.ger(params.eta, &d, x, 1.0);
    mat_blend(&mut c.mat, params.beta, &params.target.mat, 1.0);
    symmetrize(&mut c.mat);
    c.aperture = params.gamma;
    Ok(())
}

fn check_pair(c0: &Conceptor, c1: &Conceptor) -> Result<()> {
    if c0.mat.shape() != c1.mat.shape() {
        return Err(Error::DimensionMismatch(format!(
            "conceptors are {}x{} and {}x{}",
            c0.mat.nrows(),
            c0.mat.ncols(),
            c1.mat.nrows(),
            c1.mat.ncols()
        )));
    }
    if c0.aperture != c1.aperture {
        return Err(invalid_param(
            "aperture",
            format!(
                "endpoints have different apertures ({} vs {})",
                c0.aperture, c1.aperture
            ),
        ));
    }
    Ok(())
}

/// (1−λ)·C_0 + λ·C_1. λ=0 reproduces C_0, λ=1 reproduces C_1, so a ramp
/// of λ moves the dynamics from the first stored pattern to the second.
pub fn interpolate_conceptors(c0: &Conceptor, c1: &Conceptor, lambda: f64) -> Result<Conceptor> {
    if !(0.0..=1.0).contains(&lambda) || !lambda.is_finite() {
        return Err(Error::LambdaOutOfRange(lambda));
    }
    check_pair(c0, c1)?;
    let mut mat = c0.mat.clone();
    mat_blend(&mut mat, lambda, &c1.mat, 1.0 - lambda);
    Ok(Conceptor {
        mat,
        aperture: c0.aperture,
    })
}

/// Save as CSV: header line `n,aperture`, its values, then the matrix
/// row-major. Values round-trip exactly.
pub fn save_conceptor(c: &Conceptor, path: &Path) -> Result<()> {
    let mut out = String::from("n,aperture\n");
    let _ = writeln!(out, "{},{}", c.mat.nrows(), c.aperture);
    for i in 0..c.mat.nrows() {
        for j in 0..c.mat.ncols() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", c.mat[(i, j)]);
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn load_conceptor(path: &Path) -> Result<Conceptor> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let perr = |row: usize, col: usize, reason: String| Error::Parse {
        path: path.display().to_string(),
        row,
        col,
        reason,
    };
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "n,aperture" => {}
        _ => return Err(perr(1, 1, "expected header `n,aperture`".into())),
    }
    let meta = lines
        .next()
        .ok_or_else(|| perr(2, 1, "missing size line".into()))?;
    let (n_str, g_str) = meta
        .split_once(',')
        .ok_or_else(|| perr(2, 1, "expected `n,aperture` values".into()))?;
    let n: usize = n_str
        .trim()
        .parse()
        .map_err(|_| perr(2, 1, format!("bad dimension `{n_str}`")))?;
    let aperture: f64 = g_str
        .trim()
        .parse()
        .map_err(|_| perr(2, 2, format!("bad aperture `{g_str}`")))?;

    let mut mat = Matrix::zeros(n, n);
    for i in 0..n {
        let line = lines
            .next()
            .ok_or_else(|| perr(3 + i, 1, "unexpected end of file".into()))?;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != n {
            return Err(perr(
                3 + i,
                1,
                format!("expected {n} values, found {}", cells.len()),
            ));
        }
        for (j, cell) in cells.iter().enumerate() {
            mat[(i, j)] = cell
                .trim()
                .parse()
                .map_err(|_| perr(3 + i, j + 1, format!("non-numeric value `{cell}`")))?;
        }
    }
    Ok(Conceptor { mat, aperture })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reservoir::init_reservoir;
    use crate::rng::SeedRng;
    use approx::assert_relative_eq;

    fn sorted_eigenvalues(m: &Matrix) -> Vec<f64> {
        let mut e: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().cloned().collect();
        e.sort_by(f64::total_cmp);
        e
    }

    #[test]
    fn zero_states_zero_conceptor() {
        let states = Matrix::zeros(5, 20);
        let c = conceptor_from_states(&states, 3.0).unwrap();
        assert!(c.mat.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn whitened_states_give_half_identity() {
        // states·statesᵀ/L = I when states = √N·I with L = N columns.
        let n = 6;
        let states = Matrix::identity(n, n) * (n as f64).sqrt();
        let c = conceptor_from_states(&states, 1.0).unwrap();
        assert!((c.mat - Matrix::identity(n, n) * 0.5).norm() < 1e-12);
    }

    #[test]
    fn diagonal_hand_case() {
        // R = diag(4, 1), γ = 0.5 so γ⁻² = 4: eigenvalue map s/(s+4)
        // gives diag(0.5, 0.2).
        let states = Matrix::from_partial_diagonal(2, 2, &[8.0_f64.sqrt(), 2.0_f64.sqrt()]);
        let c = conceptor_from_states(&states, 0.5).unwrap();
        assert_relative_eq!(c.mat[(0, 0)], 0.5, epsilon = 1e-12);
        assert_relative_eq!(c.mat[(1, 1)], 0.2, epsilon = 1e-12);
        assert!(c.mat[(0, 1)].abs() < 1e-14);
    }

    #[test]
    fn conceptor_algebra_on_random_state_clouds() {
        for seed in 0..20 {
            let mut rng = SeedRng::new(300 + seed);
            let states = rng.normal_matrix(8, 40);

            let c = conceptor_from_states(&states, 2.0).unwrap();
            assert!(c.asymmetry() < 1e-8);
            for &e in sorted_eigenvalues(&c.mat).iter() {
                assert!((0.0..1.0).contains(&e), "eigenvalue {e} outside [0,1)");
            }

            // Tiny aperture closes everything.
            let tiny = conceptor_from_states(&states, 1e-3).unwrap();
            assert!(tiny.mat.norm() < 1e-3 * 8.0);

            // Huge aperture opens everything, provided R is full rank.
            let r = &states * states.transpose() / 40.0;
            let min_eig = sorted_eigenvalues(&r)[0];
            assert!(min_eig >= 1e-3, "seed {seed}: degenerate R in test setup");
            let wide = conceptor_from_states(&states, 1e6).unwrap();
            assert!((wide.mat - Matrix::identity(8, 8)).norm() < 1e-3);

            // Eigenvalues grow monotonically with aperture.
            let e1 = sorted_eigenvalues(&conceptor_from_states(&states, 1.0).unwrap().mat);
            let e2 = sorted_eigenvalues(&conceptor_from_states(&states, 2.0).unwrap().mat);
            let e4 = sorted_eigenvalues(&conceptor_from_states(&states, 4.0).unwrap().mat);
            for i in 0..8 {
                assert!(e1[i] <= e2[i] + 1e-12);
                assert!(e2[i] <= e4[i] + 1e-12);
            }
        }
    }

    #[test]
    fn rejects_nonpositive_aperture() {
        let states = Matrix::zeros(3, 3);
        assert!(matches!(
            conceptor_from_states(&states, 0.0),
            Err(Error::InvalidAperture(_))
        ));
        assert!(matches!(
            conceptor_from_states(&states, -2.0),
            Err(Error::InvalidAperture(_))
        ));
    }

    #[test]
    fn constrained_step_identity_matches_drive() {
        let p = init_reservoir(10, 0.75, 1.2, 1.0, 0.5, 1, 42).unwrap();
        let mut rng = SeedRng::new(1);
        let s = ReservoirState::new(rng.normal_vector(10) * 0.3);
        let u = Vector::from_element(1, 0.7);
        let ident = Conceptor {
            mat: Matrix::identity(10, 10),
            aperture: 1.0,
        };
        let a = constrained_step(&p, &s, &u, &ident).unwrap();
        let b = crate::reservoir::drive_step(&p, &s, &u).unwrap();
        assert!((a.x - b.x).norm() < 1e-14);
    }

    #[test]
    fn constrained_step_zero_conceptor() {
        let p = init_reservoir(10, 0.75, 1.2, 1.0, 0.5, 1, 42).unwrap();
        let mut rng = SeedRng::new(2);
        let s = ReservoirState::new(rng.normal_vector(10));
        let zero = Conceptor {
            mat: Matrix::zeros(10, 10),
            aperture: 1.0,
        };
        let next = constrained_step(&p, &s, &Vector::zeros(1), &zero).unwrap();
        assert!(next.x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constrained_step_rank_one_projector() {
        let p = init_reservoir(12, 0.75, 1.2, 1.0, 0.5, 1, 43).unwrap();
        let mut rng = SeedRng::new(3);
        let v = rng.normal_vector(12).normalize();
        let proj = Conceptor {
            mat: &v * v.transpose(),
            aperture: 1.0,
        };
        let s = ReservoirState::new(rng.normal_vector(12));
        let next = constrained_step(&p, &s, &Vector::from_element(1, 0.4), &proj).unwrap();
        let residual = &next.x - &v * v.dot(&next.x);
        assert!(residual.norm() < 1e-12);
    }

    #[test]
    fn autoconceptor_decay_only_at_zero_state() {
        let mut rng = SeedRng::new(4);
        let states = rng.normal_matrix(6, 30);
        let c = conceptor_from_states(&states, 2.0).unwrap();
        let next = autoconceptor_step(&c, &Vector::zeros(6), 0.3, 2.0).unwrap();
        let factor = 1.0 - 0.3 * 0.25;
        for (a, b) in next.mat.iter().zip(c.mat.iter()) {
            assert_relative_eq!(*a, factor * b, epsilon = 1e-15);
        }
    }

    #[test]
    fn autoconceptor_scalar_fixed_point() {
        // N=1, constant x=2, γ=1: c* solves (x − cx)x = γ⁻²c, c* = 4/5.
        let mut c = Conceptor {
            mat: Matrix::zeros(1, 1),
            aperture: 1.0,
        };
        let x = Vector::from_element(1, 2.0);
        for _ in 0..2000 {
            autoconceptor_step_mut(&mut c, &x, 0.1).unwrap();
        }
        assert!((c.mat[(0, 0)] - 0.8).abs() < 1e-10);
    }

    #[test]
    fn autoconceptor_stays_symmetric() {
        let mut rng = SeedRng::new(5);
        let mut c = Conceptor {
            mat: Matrix::zeros(8, 8),
            aperture: 3.0,
        };
        for _ in 0..500 {
            let x = rng.normal_vector(8) * 0.5;
            autoconceptor_step_mut(&mut c, &x, 0.05).unwrap();
            assert!(c.asymmetry() < 1e-8);
        }
    }

    #[test]
    fn pure_and_mut_steps_agree() {
        let mut rng = SeedRng::new(6);
        let states = rng.normal_matrix(5, 25);
        let c0 = conceptor_from_states(&states, 2.0).unwrap();
        let target = conceptor_from_states(&rng.normal_matrix(5, 25), 2.0).unwrap();
        let params = CclParams::new(0.05, 0.01, 2.0, target).unwrap();
        let x = rng.normal_vector(5);

        let auto_pure = autoconceptor_step(&c0, &x, 0.05, 2.0).unwrap();
        let mut auto_mut = c0.clone();
        autoconceptor_step_mut(&mut auto_mut, &x, 0.05).unwrap();
        assert_eq!(auto_pure.mat, auto_mut.mat);

        let (next_pure, adapt_pure) = ccl_step(&c0, &x, &params).unwrap();
        let mut next_mut = c0.clone();
        let mut adapt_mut = Conceptor {
            mat: Matrix::zeros(5, 5),
            aperture: 2.0,
        };
        ccl_step_mut(&mut next_mut, &mut adapt_mut, &x, &params).unwrap();
        assert_eq!(next_pure.mat, next_mut.mat);
        assert_eq!(adapt_pure.mat, adapt_mut.mat);

        let merged_pure = merged_ccl_step(&c0, &x, &params).unwrap();
        let mut merged_mut = c0.clone();
        merged_ccl_step_mut(&mut merged_mut, &x, &params).unwrap();
        assert_eq!(merged_pure.mat, merged_mut.mat);
    }

    #[test]
    fn ccl_pull_is_linear_in_beta() {
        let mut rng = SeedRng::new(7);
        let c0 = conceptor_from_states(&rng.normal_matrix(6, 30), 2.0).unwrap();
        let target = conceptor_from_states(&rng.normal_matrix(6, 30), 2.0).unwrap();
        let x = rng.normal_vector(6) * 0.5;

        let p0 = CclParams::new(0.05, 0.0, 2.0, target.clone()).unwrap();
        let (next, adapt) = ccl_step(&c0, &x, &p0).unwrap();
        assert_eq!(adapt.mat, next.mat);

        let p1 = CclParams::new(0.05, 1.0, 2.0, target.clone()).unwrap();
        let (_, adapt) = ccl_step(&c0, &x, &p1).unwrap();
        assert!((adapt.mat - &target.mat).norm() < 1e-14);

        let ph = CclParams::new(0.05, 0.5, 2.0, target.clone()).unwrap();
        let (next, adapt) = ccl_step(&c0, &x, &ph).unwrap();
        let mid = (&next.mat + &target.mat) * 0.5;
        assert!((adapt.mat - mid).norm() < 1e-14);
    }

    #[test]
    fn merged_with_unit_pull_lands_on_target() {
        let mut rng = SeedRng::new(8);
        let c0 = conceptor_from_states(&rng.normal_matrix(6, 30), 2.0).unwrap();
        let target = conceptor_from_states(&rng.normal_matrix(6, 30), 2.0).unwrap();
        // η is validated positive, so approximate η=0 with a negligible value.
        let params = CclParams::new(1e-300, 1.0, 2.0, target.clone()).unwrap();
        let next = merged_ccl_step(&c0, &Vector::zeros(6), &params).unwrap();
        assert!((next.mat - &target.mat).norm() < 1e-12);
    }

    #[test]
    fn merged_pull_contracts_geometrically() {
        let mut rng = SeedRng::new(9);
        let mut c = conceptor_from_states(&rng.normal_matrix(6, 30), 2.0).unwrap();
        let target = conceptor_from_states(&rng.normal_matrix(6, 30), 2.0).unwrap();
        let beta = 0.25;
        let params = CclParams::new(1e-300, beta, 2.0, target.clone()).unwrap();
        let mut dist = (&c.mat - &target.mat).norm();
        for _ in 0..5 {
            merged_ccl_step_mut(&mut c, &Vector::zeros(6), &params).unwrap();
            let next_dist = (&c.mat - &target.mat).norm();
            assert_relative_eq!(next_dist, (1.0 - beta) * dist, max_relative = 1e-9);
            dist = next_dist;
        }
    }

    #[test]
    fn merged_and_two_step_agree_without_pull() {
        let mut rng = SeedRng::new(10);
        let c0 = conceptor_from_states(&rng.normal_matrix(5, 25), 2.0).unwrap();
        let target = conceptor_from_states(&rng.normal_matrix(5, 25), 2.0).unwrap();
        let params = CclParams::new(0.04, 0.0, 2.0, target).unwrap();

        let mut two_step = c0.clone();
        let mut merged = c0.clone();
        let mut adapt = Conceptor {
            mat: Matrix::zeros(5, 5),
            aperture: 2.0,
        };
        for _ in 0..100 {
            let x = rng.normal_vector(5) * 0.6;
            ccl_step_mut(&mut two_step, &mut adapt, &x, &params).unwrap();
            merged_ccl_step_mut(&mut merged, &x, &params).unwrap();
            assert_eq!(two_step.mat, merged.mat);
            assert_eq!(adapt.mat, merged.mat);
        }
    }

    #[test]
    fn merged_steady_state_sits_between_autoconceptor_and_target() {
        // Scalar case, constant drive x=2, γ=1, target 0.2: the merged
        // fixed point solves η(4 − 5c) = β(c − 0.2),
        // c_ss = (4η + 0.2β)/(5η + β).
        let x = Vector::from_element(1, 2.0);
        let target = Conceptor {
            mat: Matrix::from_element(1, 1, 0.2),
            aperture: 1.0,
        };
        let eta = 0.05;
        let beta = 1e-3;
        let params = CclParams::new(eta, beta, 1.0, target).unwrap();
        let mut c = Conceptor {
            mat: Matrix::from_element(1, 1, 0.5),
            aperture: 1.0,
        };
        for _ in 0..20_000 {
            merged_ccl_step_mut(&mut c, &x, &params).unwrap();
        }
        let expect = (4.0 * eta + 0.2 * beta) / (5.0 * eta + beta);
        assert!((c.mat[(0, 0)] - expect).abs() < 1e-9);
        // Closer to the target than the pull-free fixed point 0.8 is.
        assert!((c.mat[(0, 0)] - 0.2).abs() < (0.8_f64 - 0.2).abs());
    }

    #[test]
    fn interpolation_endpoints_and_midpoint() {
        let c0 = Conceptor {
            mat: Matrix::from_partial_diagonal(2, 2, &[0.8, 0.0]),
            aperture: 2.0,
        };
        let c1 = Conceptor {
            mat: Matrix::from_partial_diagonal(2, 2, &[0.0, 0.8]),
            aperture: 2.0,
        };
        assert_eq!(interpolate_conceptors(&c0, &c1, 0.0).unwrap().mat, c0.mat);
        assert_eq!(interpolate_conceptors(&c0, &c1, 1.0).unwrap().mat, c1.mat);
        let mid = interpolate_conceptors(&c0, &c1, 0.5).unwrap();
        assert!((mid.mat - Matrix::identity(2, 2) * 0.4).norm() < 1e-15);

        assert!(matches!(
            interpolate_conceptors(&c0, &c1, -0.1),
            Err(Error::LambdaOutOfRange(_))
        ));
        assert!(matches!(
            interpolate_conceptors(&c0, &c1, 1.1),
            Err(Error::LambdaOutOfRange(_))
        ));
    }

    #[test]
    fn interpolation_never_exceeds_endpoint_spectra() {
        let mut rng = SeedRng::new(11);
        for _ in 0..10 {
            let c0 = conceptor_from_states(&rng.normal_matrix(6, 40), 3.0).unwrap();
            let c1 = conceptor_from_states(&rng.normal_matrix(6, 40), 3.0).unwrap();
            let top0 = *sorted_eigenvalues(&c0.mat).last().unwrap();
            let top1 = *sorted_eigenvalues(&c1.mat).last().unwrap();
            for lambda in [0.1, 0.25, 0.5, 0.75, 0.9] {
                let c = interpolate_conceptors(&c0, &c1, lambda).unwrap();
                let top = *sorted_eigenvalues(&c.mat).last().unwrap();
                assert!(top <= top0.max(top1) + 1e-12);
                assert!(c.asymmetry() < 1e-8);
            }
        }
    }

    #[test]
    fn schedule_ramp_clips_at_one() {
        let c0 = Conceptor {
            mat: Matrix::zeros(2, 2),
            aperture: 1.0,
        };
        let c1 = Conceptor {
            mat: Matrix::identity(2, 2) * 0.5,
            aperture: 1.0,
        };
        let sched = InterpolationSchedule::new(c0, c1, 1e-5).unwrap();
        assert_eq!(sched.lambda_of_k(0), 0.0);
        assert_relative_eq!(sched.lambda_of_k(50_000), 0.5, epsilon = 1e-12);
        assert_eq!(sched.lambda_of_k(100_000), 1.0);
        assert_eq!(sched.lambda_of_k(5_000_000), 1.0);

        let mut buf = Conceptor {
            mat: Matrix::zeros(2, 2),
            aperture: 1.0,
        };
        sched.target_at_into(30_000, &mut buf);
        let direct = sched.target_at(30_000).unwrap();
        assert_eq!(buf.mat, direct.mat);
    }

    #[test]
    fn conceptor_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let mut rng = SeedRng::new(12);
        let c = conceptor_from_states(&rng.normal_matrix(7, 30), 25.0).unwrap();
        save_conceptor(&c, &path).unwrap();
        let back = load_conceptor(&path).unwrap();
        assert_eq!(back.aperture.to_bits(), c.aperture.to_bits());
        assert!(back
            .mat
            .iter()
            .zip(c.mat.iter())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}
