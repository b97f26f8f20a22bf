//! Leaky-integration echo state reservoir.
//!
//! The state update is x(k+1) = (1−α)x(k) + α·tanh(W x(k) + W_in u(k) + b).
//! Only the linear readout is ever trained; W, W_in, and b stay fixed after
//! initialization. Autonomous mode closes the loop by feeding the readout
//! prediction back in place of the input. Partial degradation clamps a fixed
//! subset of state coordinates to zero after every update.

use std::fmt::Write as _;
use std::path::Path;

use crate::conceptor::Conceptor;
use crate::error::{invalid_param, Error, Result};
use crate::linalg::{
    ensure_vector_finite, ridge_solve, scale_to_spectral_radius, Matrix, Vector,
};
use crate::rng::SeedRng;
use crate::signals::TimeSeries;

/// Fixed wiring of a reservoir. Immutable after [`init_reservoir`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirParams {
    pub n: usize,
    pub m_in: usize,
    /// Leak rate α ∈ (0,1].
    pub alpha: f64,
    pub w: Matrix,
    pub w_in: Matrix,
    pub bias: Vector,
    pub rho: f64,
    pub rho_in: f64,
    pub rho_b: f64,
    pub seed: u64,
}

/// State vector plus its discrete time index.
#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirState {
    pub x: Vector,
    pub k: usize,
}

impl ReservoirState {
    pub fn zero(n: usize) -> Self {
        Self {
            x: Vector::zeros(n),
            k: 0,
        }
    }

    pub fn new(x: Vector) -> Self {
        Self { x, k: 0 }
    }
}

/// Set of state coordinates forced to zero while degradation is active.
#[derive(Debug, Clone, PartialEq)]
pub struct DegradationMask {
    /// Sorted, distinct node indices.
    indices: Vec<usize>,
}

impl DegradationMask {
    pub fn new(mut indices: Vec<usize>, n: usize) -> Result<Self> {
        indices.sort_unstable();
        for pair in indices.windows(2) {
            if pair[0] == pair[1] {
                return Err(invalid_param(
                    "indices",
                    format!("duplicate clamped index {}", pair[0]),
                ));
            }
        }
        if let Some(&max) = indices.last() {
            if max >= n {
                return Err(Error::IndexOutOfRange { index: max, bound: n });
            }
        }
        Ok(Self { indices })
    }

    /// `count` distinct indices drawn without replacement from `0..n`.
    pub fn random(n: usize, count: usize, rng: &mut SeedRng) -> Result<Self> {
        if count > n {
            return Err(invalid_param(
                "count",
                format!("cannot clamp {count} of {n} nodes"),
            ));
        }
        Ok(Self {
            indices: rng.sample_indices(n, count),
        })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn count(&self) -> usize {
        self.indices.len()
    }
}

/// Linear readout y = W_out·x with the ridge strength it was fit at.
#[derive(Debug, Clone, PartialEq)]
pub struct Readout {
    pub w_out: Matrix,
    pub reg: f64,
}

impl Readout {
    /// Ridge regression from harvested states (N×L) onto aligned targets.
    pub fn fit(states: &Matrix, targets: &TimeSeries, reg: f64) -> Result<Self> {
        let y = targets.data.transpose();
        let w_out = ridge_solve(states, &y, reg)?;
        Ok(Self { w_out, reg })
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        &self.w_out * x
    }
}

/// Build a reservoir from a seed: W dense i.i.d. N(0,1) rescaled to spectral
/// radius `rho`, then W_in (row-major) and b scaled by `rho_in`, `rho_b`.
/// The draw order W → W_in → b is part of the reproducibility contract.
pub fn init_reservoir(
    n: usize,
    alpha: f64,
    rho: f64,
    rho_in: f64,
    rho_b: f64,
    m_in: usize,
    seed: u64,
) -> Result<ReservoirParams> {
    if n == 0 {
        return Err(invalid_param("n", "need at least one node"));
    }
    if m_in == 0 {
        return Err(invalid_param("m_in", "need at least one input channel"));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid_param(
            "alpha",
            format!("leak rate must be in (0,1], got {alpha}"),
        ));
    }
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(invalid_param(
            "rho",
            format!("spectral radius must be positive and finite, got {rho}"),
        ));
    }
    if !rho_in.is_finite() || !rho_b.is_finite() {
        return Err(invalid_param("rho_in/rho_b", "must be finite"));
    }

    let mut rng = SeedRng::new(seed);
    let w = scale_to_spectral_radius(&rng.normal_matrix(n, n), rho)?;
    let w_in = rng.normal_matrix(n, m_in) * rho_in;
    let bias = rng.normal_vector(n) * rho_b;

    Ok(ReservoirParams {
        n,
        m_in,
        alpha,
        w,
        w_in,
        bias,
        rho,
        rho_in,
        rho_b,
        seed,
    })
}

fn check_state_dims(p: &ReservoirParams, s: &ReservoirState) -> Result<()> {
    if s.x.len() != p.n {
        return Err(Error::DimensionMismatch(format!(
            "state has {} entries for an N={} reservoir",
            s.x.len(),
            p.n
        )));
    }
    Ok(())
}

/// Pre-activation tanh(W x + W_in u + b), the shared core of every step.
fn activation(p: &ReservoirParams, x: &Vector, u: &Vector) -> Vector {
    let mut pre = p.bias.clone();
    pre.gemv(1.0, &p.w, x, 1.0);
    pre.gemv(1.0, &p.w_in, u, 1.0);
    pre.apply(|v| *v = v.tanh());
    pre
}

/// One driven update in place: x ← (1−α)x + α·tanh(W x + W_in u + b).
pub fn drive_step_mut(p: &ReservoirParams, s: &mut ReservoirState, u: &Vector) -> Result<()> {
    check_state_dims(p, s)?;
    if u.len() != p.m_in {
        return Err(Error::DimensionMismatch(format!(
            "input has {} channels, reservoir expects {}",
            u.len(),
            p.m_in
        )));
    }
    let act = activation(p, &s.x, u);
    s.x *= 1.0 - p.alpha;
    s.x.axpy(p.alpha, &act, 1.0);
    s.k += 1;
    Ok(())
}

/// One driven update, returning the successor state.
pub fn drive_step(p: &ReservoirParams, s: &ReservoirState, u: &Vector) -> Result<ReservoirState> {
    let mut next = s.clone();
    drive_step_mut(p, &mut next, u)?;
    Ok(next)
}

/// Drive the reservoir from x(0)=0 over a series and collect, after the
/// washout, the pairs (state after consuming u(k), one-step-ahead target
/// u(k+1)). States come back column-stacked (N×L′), targets index-aligned.
pub fn harvest(
    p: &ReservoirParams,
    u_series: &TimeSeries,
    washout: usize,
) -> Result<(Matrix, TimeSeries)> {
    let l = u_series.len();
    if l < washout + 2 {
        return Err(Error::SeriesTooShort {
            len: l,
            needed: washout + 2,
        });
    }
    let pairs = l - 1 - washout;
    let mut states = Matrix::zeros(p.n, pairs);
    let mut targets = Matrix::zeros(pairs, u_series.channels());

    let mut s = ReservoirState::zero(p.n);
    for k in 0..l - 1 {
        let u = u_series.at(k);
        drive_step_mut(p, &mut s, &u)?;
        if k >= washout {
            let j = k - washout;
            states.set_column(j, &s.x);
            targets.row_mut(j).copy_from(&u_series.data.row(k + 1));
        }
    }
    ensure_vector_finite(&s.x, "harvest")?;
    Ok((states, TimeSeries::new(targets)?))
}

/// One closed-loop update: y(k) = W_out x(k) from the pre-update state, then
/// x(k+1) = C[(1−α)x(k) + α·tanh(W x(k) + W_in y(k) + b)], C = identity when
/// no conceptor is given. Returns y(k).
pub fn autonomous_step_mut(
    p: &ReservoirParams,
    s: &mut ReservoirState,
    r: &Readout,
    c: Option<&Conceptor>,
) -> Result<Vector> {
    check_state_dims(p, s)?;
    if r.w_out.ncols() != p.n || r.w_out.nrows() != p.m_in {
        return Err(Error::DimensionMismatch(format!(
            "readout is {}x{}, autonomous mode needs {}x{}",
            r.w_out.nrows(),
            r.w_out.ncols(),
            p.m_in,
            p.n
        )));
    }
    let y = r.apply(&s.x);
    let act = activation(p, &s.x, &y);
    s.x *= 1.0 - p.alpha;
    s.x.axpy(p.alpha, &act, 1.0);
    if let Some(c) = c {
        if c.mat.ncols() != p.n {
            return Err(Error::DimensionMismatch(format!(
                "conceptor is {}x{} for an N={} reservoir",
                c.mat.nrows(),
                c.mat.ncols(),
                p.n
            )));
        }
        let projected = &c.mat * &s.x;
        s.x.copy_from(&projected);
    }
    s.k += 1;
    Ok(y)
}

/// One closed-loop update, returning (successor state, output y(k)).
pub fn autonomous_step(
    p: &ReservoirParams,
    s: &ReservoirState,
    r: &Readout,
    c: Option<&Conceptor>,
) -> Result<(ReservoirState, Vector)> {
    let mut next = s.clone();
    let y = autonomous_step_mut(p, &mut next, r, c)?;
    Ok((next, y))
}

/// Zero the masked coordinates in place. Call after every update while the
/// degradation is active.
pub fn apply_degradation_mut(s: &mut ReservoirState, m: &DegradationMask) -> Result<()> {
    if let Some(&max) = m.indices.last() {
        if max >= s.x.len() {
            return Err(Error::IndexOutOfRange {
                index: max,
                bound: s.x.len(),
            });
        }
    }
    for &i in &m.indices {
        s.x[i] = 0.0;
    }
    Ok(())
}

/// Zero the masked coordinates, returning the clamped state.
pub fn apply_degradation(s: &ReservoirState, m: &DegradationMask) -> Result<ReservoirState> {
    let mut next = s.clone();
    apply_degradation_mut(&mut next, m)?;
    Ok(next)
}

fn push_matrix(out: &mut String, m: &Matrix) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{}", m[(i, j)]);
        }
        out.push('\n');
    }
}

/// Save wiring as text: a header with the scalar fields, then W, W_in, b
/// row-major. Values round-trip exactly through load_params.
pub fn save_params(p: &ReservoirParams, path: &Path) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "reservoir n={} m_in={} alpha={} rho={} rho_in={} rho_b={} seed={}",
        p.n, p.m_in, p.alpha, p.rho, p.rho_in, p.rho_b, p.seed
    );
    push_matrix(&mut out, &p.w);
    push_matrix(&mut out, &p.w_in);
    push_matrix(&mut out, &Matrix::from_row_slice(1, p.n, p.bias.as_slice()));
    std::fs::write(path, out).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn load_params(path: &Path) -> Result<ReservoirParams> {
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

    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| perr(1, 1, "empty file".into()))?;
    let mut fields = std::collections::HashMap::new();
    for tok in header.split_whitespace().skip(1) {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| perr(1, 1, format!("malformed header token `{tok}`")))?;
        fields.insert(k.to_string(), v.to_string());
    }
    let get = |k: &str| -> Result<&String> {
        fields
            .get(k)
            .ok_or_else(|| perr(1, 1, format!("missing header field `{k}`")))
    };
    let n: usize = get("n")?.parse().map_err(|_| perr(1, 1, "bad n".into()))?;
    let m_in: usize = get("m_in")?
        .parse()
        .map_err(|_| perr(1, 1, "bad m_in".into()))?;
    let parse_f = |k: &str| -> Result<f64> {
        get(k)?
            .parse()
            .map_err(|_| perr(1, 1, format!("bad {k}")))
    };
    let alpha = parse_f("alpha")?;
    let rho = parse_f("rho")?;
    let rho_in = parse_f("rho_in")?;
    let rho_b = parse_f("rho_b")?;
    let seed: u64 = get("seed")?
        .parse()
        .map_err(|_| perr(1, 1, "bad seed".into()))?;

    let mut read_rows = |rows: usize, cols: usize| -> Result<Matrix> {
        let mut m = Matrix::zeros(rows, cols);
        for i in 0..rows {
            let (idx, line) = lines
                .next()
                .ok_or_else(|| perr(0, 1, "unexpected end of file".into()))?;
            let vals: Vec<&str> = line.split_whitespace().collect();
            if vals.len() != cols {
                return Err(perr(
                    idx + 1,
                    1,
                    format!("expected {cols} values, found {}", vals.len()),
                ));
            }
            for (j, v) in vals.iter().enumerate() {
                m[(i, j)] = v
                    .parse()
                    .map_err(|_| perr(idx + 1, j + 1, format!("non-numeric value `{v}`")))?;
            }
        }
        Ok(m)
    };

    let w = read_rows(n, n)?;
    let w_in = read_rows(n, m_in)?;
    let bias = read_rows(1, n)?.transpose().column(0).into_owned();

    Ok(ReservoirParams {
        n,
        m_in,
        alpha,
        w,
        w_in,
        bias,
        rho,
        rho_in,
        rho_b,
        seed,
    })
}
