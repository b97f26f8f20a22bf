//! Signal generation, CSV ingestion/emission, and distortion operators.
//!
//! A [`TimeSeries`] is a time-major L×M matrix: one row per time step, one
//! column per channel. Generators are pure functions of their arguments
//! (plus seed where randomness is involved).

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{invalid_param, Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::rng::SeedRng;

/// Multichannel time series, one row per step.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    /// L×M values, time down the rows.
    pub data: Matrix,
    /// Optional per-channel names, carried through CSV round trips.
    pub labels: Option<Vec<String>>,
}

impl TimeSeries {
    pub fn new(data: Matrix) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::DegenerateInput(
                "time series needs at least one row and one channel".into(),
            ));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("TimeSeries::new"));
        }
        Ok(Self { data, labels: None })
    }

    /// Single-channel series from a plain value list.
    pub fn from_channel(values: Vec<f64>) -> Result<Self> {
        let l = values.len();
        Self::new(DMatrix::from_vec(l, 1, values))
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.channels() {
            return Err(Error::ShapeMismatch(format!(
                "{} labels for {} channels",
                labels.len(),
                self.channels()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    pub fn channels(&self) -> usize {
        self.data.ncols()
    }

    /// Value row at step `k` as a column vector (the u(k) of the update
    /// equations).
    pub fn at(&self, k: usize) -> Vector {
        self.data.row(k).transpose()
    }

    /// Channel `m` as a contiguous vector.
    pub fn channel(&self, m: usize) -> Vector {
        Vector::from(self.data.column(m))
    }

    /// Rows [start, start+len) as a new series.
    pub fn slice(&self, start: usize, len: usize) -> Result<Self> {
        if start + len > self.len() || len == 0 {
            return Err(Error::IndexOutOfRange {
                index: start + len,
                bound: self.len(),
            });
        }
        Ok(Self {
            data: self.data.rows(start, len).into_owned(),
            labels: self.labels.clone(),
        })
    }
}

/// Gain/offset perturbation switched on at a given step.
#[derive(Debug, Clone, Copy)]
pub struct DistortionSpec {
    pub gain: f64,
    pub offset: f64,
    /// First time index the distortion applies to.
    pub onset: usize,
}

impl DistortionSpec {
    pub fn new(gain: f64, offset: f64, onset: usize) -> Result<Self> {
        if !gain.is_finite() {
            return Err(invalid_param("gain", format!("must be finite, got {gain}")));
        }
        if !offset.is_finite() {
            return Err(invalid_param(
                "offset",
                format!("must be finite, got {offset}"),
            ));
        }
        Ok(Self { gain, offset, onset })
    }
}

/// Single sine, u(n) = amplitude·sin(2πn/period + phase).
pub fn gen_sine(period: f64, length: usize, amplitude: f64, phase: f64) -> Result<TimeSeries> {
    if !(period > 0.0) || !period.is_finite() {
        return Err(invalid_param(
            "period",
            format!("must be positive and finite, got {period}"),
        ));
    }
    if length == 0 {
        return Err(invalid_param("length", "must be at least 1"));
    }
    if !amplitude.is_finite() || !phase.is_finite() {
        return Err(invalid_param(
            "amplitude/phase",
            "must be finite",
        ));
    }
    let w = 2.0 * std::f64::consts::PI / period;
    TimeSeries::from_channel(
        (0..length)
            .map(|n| amplitude * (w * n as f64 + phase).sin())
            .collect(),
    )
}

/// Two-sine mixture u(n) = sin(2πn/7) + sin(2πn/21); overall period 21.
pub fn gen_two_sine(length: usize) -> Result<TimeSeries> {
    if length == 0 {
        return Err(invalid_param("length", "must be at least 1"));
    }
    let w7 = 2.0 * std::f64::consts::PI / 7.0;
    let w21 = 2.0 * std::f64::consts::PI / 21.0;
    TimeSeries::from_channel(
        (0..length)
            .map(|n| (w7 * n as f64).sin() + (w21 * n as f64).sin())
            .collect(),
    )
}

/// Multichannel limit cycle: channel m is a_m·sin(2πn/period + φ_m) + c_m
/// with a ~ U[0.5, 1.5), φ ~ U[0, 2π), c ~ U[−0.5, 0.5), drawn per channel
/// in that order. A synthetic stand-in for gait-like multivariate data: all
/// channels share one period, so the trajectory is a closed planar cycle.
pub fn gen_multivar_cycle(
    channels: usize,
    period: f64,
    length: usize,
    seed: u64,
) -> Result<TimeSeries> {
    if channels == 0 {
        return Err(invalid_param("channels", "must be at least 1"));
    }
    if !(period > 0.0) || !period.is_finite() {
        return Err(invalid_param(
            "period",
            format!("must be positive and finite, got {period}"),
        ));
    }
    if length == 0 {
        return Err(invalid_param("length", "must be at least 1"));
    }
    let mut rng = SeedRng::new(seed);
    let w = 2.0 * std::f64::consts::PI / period;
    let mut data = Matrix::zeros(length, channels);
    for m in 0..channels {
        let a = rng.uniform(0.5, 1.5);
        let phi = rng.uniform(0.0, 2.0 * std::f64::consts::PI);
        let c = rng.uniform(-0.5, 0.5);
        for n in 0..length {
            data[(n, m)] = a * (w * n as f64 + phi).sin() + c;
        }
    }
    TimeSeries::new(data)
}

/// u′(n) = gain·u(n) + offset for n ≥ onset; earlier rows pass through.
pub fn distort(u: &TimeSeries, spec: &DistortionSpec) -> TimeSeries {
    let mut data = u.data.clone();
    for n in spec.onset..data.nrows() {
        for m in 0..data.ncols() {
            data[(n, m)] = spec.gain * data[(n, m)] + spec.offset;
        }
    }
    TimeSeries {
        data,
        labels: u.labels.clone(),
    }
}

/// Per-channel zero mean, unit (population) variance.
pub fn standardize(u: &TimeSeries) -> Result<TimeSeries> {
    let l = u.len() as f64;
    let mut data = u.data.clone();
    for m in 0..u.channels() {
        let mean = data.column(m).sum() / l;
        let var = data.column(m).iter().map(|v| (v - mean).powi(2)).sum::<f64>() / l;
        if var <= 0.0 {
            return Err(Error::ZeroVarianceTarget(m));
        }
        let inv = 1.0 / var.sqrt();
        for n in 0..u.len() {
            data[(n, m)] = (data[(n, m)] - mean) * inv;
        }
    }
    Ok(TimeSeries {
        data,
        labels: u.labels.clone(),
    })
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Read a rectangular numeric CSV: one time step per row, optional single
/// header row (taken as channel labels when any cell is non-numeric).
pub fn load_csv(path: &Path) -> Result<TimeSeries> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut labels: Option<Vec<String>> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let row_no = idx + 1;
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, usize> = cells
            .iter()
            .enumerate()
            .map(|(c, cell)| cell.parse::<f64>().map_err(|_| c + 1))
            .collect();

        match parsed {
            Ok(values) => {
                if let Some(w) = width {
                    if values.len() != w {
                        return Err(Error::Parse {
                            path: path.display().to_string(),
                            row: row_no,
                            col: values.len().min(w) + 1,
                            reason: format!("expected {w} columns, found {}", values.len()),
                        });
                    }
                } else {
                    width = Some(values.len());
                }
                rows.push(values);
            }
            Err(col) => {
                // Non-numeric cells are only legal in a leading header row.
                if rows.is_empty() && labels.is_none() {
                    labels = Some(cells.iter().map(|s| s.to_string()).collect());
                    width = Some(cells.len());
                } else {
                    return Err(Error::Parse {
                        path: path.display().to_string(),
                        row: row_no,
                        col,
                        reason: format!("non-numeric cell `{}`", cells[col - 1]),
                    });
                }
            }
        }
    }

    if rows.is_empty() {
        return Err(Error::Parse {
            path: path.display().to_string(),
            row: 1,
            col: 1,
            reason: "no data rows".into(),
        });
    }
    let m = width.unwrap();
    let mut data = Matrix::zeros(rows.len(), m);
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            data[(i, j)] = *v;
        }
    }
    let series = TimeSeries::new(data)?;
    match labels {
        Some(l) => series.with_labels(l),
        None => Ok(series),
    }
}

/// Write a series as CSV. Values use the shortest representation that
/// parses back to the identical f64, so emit → load is lossless.
pub fn save_csv(u: &TimeSeries, path: &Path) -> Result<()> {
    let mut out = String::new();
    if let Some(labels) = &u.labels {
        out.push_str(&labels.join(","));
        out.push('\n');
    }
    for i in 0..u.len() {
        for j in 0..u.channels() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", u.data[(i, j)]);
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}
