//! Evaluation metrics: NRMSE, integer-lag phase alignment, windowed period
//! and amplitude estimation, and the principal-component failure detector.

use crate::error::{invalid_param, Error, Result};
use crate::linalg::{pca, Matrix};
use crate::signals::TimeSeries;

/// Windowed period/amplitude estimates over a single-channel signal.
#[derive(Debug, Clone)]
pub struct PeriodTrace {
    /// Window length in steps.
    pub window: usize,
    pub entries: Vec<PeriodWindow>,
}

/// One window of the trace. `period` is None when fewer than two upward
/// zero crossings fell inside the window: the signature of a signal that
/// has stopped oscillating.
#[derive(Debug, Clone)]
pub struct PeriodWindow {
    /// Index of the first sample in the window.
    pub start: usize,
    pub period: Option<f64>,
    /// Half peak-to-peak over the window.
    pub amplitude: f64,
}

impl PeriodTrace {
    pub fn all_defined(&self) -> bool {
        self.entries.iter().all(|e| e.period.is_some())
    }
}

/// Failure call for one autonomous run.
#[derive(Debug, Clone, Copy)]
pub struct FailureVerdict {
    pub failed: bool,
    /// Sample variance along the leading principal component.
    pub pc1_variance: f64,
    pub threshold: f64,
}

/// Root-mean-square error normalized per channel by the population variance
/// of the target, averaged over channels. Predicting the target mean scores
/// exactly 1.
pub fn nrmse(pred: &TimeSeries, target: &TimeSeries) -> Result<f64> {
    if pred.data.shape() != target.data.shape() {
        return Err(Error::ShapeMismatch(format!(
            "pred is {}x{}, target is {}x{}",
            pred.len(),
            pred.channels(),
            target.len(),
            target.channels()
        )));
    }
    let l = target.len() as f64;
    let mut acc = 0.0;
    for m in 0..target.channels() {
        let mean = target.data.column(m).sum() / l;
        let var = target
            .data
            .column(m)
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / l;
        if var <= 0.0 {
            return Err(Error::ZeroVarianceTarget(m));
        }
        let mse = pred
            .data
            .column(m)
            .iter()
            .zip(target.data.column(m).iter())
            .map(|(p, t)| (p - t) * (p - t))
            .sum::<f64>()
            / l;
        acc += (mse / var).sqrt();
    }
    Ok(acc / target.channels() as f64)
}

/// Result of integer-lag alignment: both series cut to the overlap.
#[derive(Debug, Clone)]
pub struct PhaseAligned {
    /// Shift applied to `pred`; positive means pred ran `lag` steps behind.
    pub lag: isize,
    pub pred: TimeSeries,
    pub target: TimeSeries,
}

/// Find the integer lag in [−max_lag, max_lag] maximizing the mean
/// cross-correlation of the mean-removed channels, and return the
/// overlapping slices of both series at that lag. Ties go to the smaller
/// |lag| (and to the positive one between ±lag).
pub fn phase_align(pred: &TimeSeries, target: &TimeSeries, max_lag: usize) -> Result<PhaseAligned> {
    if pred.data.shape() != target.data.shape() {
        return Err(Error::ShapeMismatch(format!(
            "pred is {}x{}, target is {}x{}",
            pred.len(),
            pred.channels(),
            target.len(),
            target.channels()
        )));
    }
    let l = pred.len();
    if l < max_lag + 2 {
        return Err(Error::SeriesTooShort {
            len: l,
            needed: max_lag + 2,
        });
    }
    let chans = pred.channels();
    let lf = l as f64;
    let p_means: Vec<f64> = (0..chans).map(|m| pred.data.column(m).sum() / lf).collect();
    let t_means: Vec<f64> = (0..chans)
        .map(|m| target.data.column(m).sum() / lf)
        .collect();

    let score = |lag: isize| -> f64 {
        let overlap = l - lag.unsigned_abs();
        let (p0, t0) = if lag >= 0 {
            (lag as usize, 0)
        } else {
            (0, (-lag) as usize)
        };
        let mut acc = 0.0;
        for m in 0..chans {
            for k in 0..overlap {
                acc += (pred.data[(p0 + k, m)] - p_means[m])
                    * (target.data[(t0 + k, m)] - t_means[m]);
            }
        }
        acc / overlap as f64
    };

    let mut best_lag = 0isize;
    let mut best = f64::NEG_INFINITY;
    // 0, 1, −1, 2, −2, …: first strict maximum wins, so ties resolve
    // toward zero and toward the positive side.
    for step in 0..=max_lag as isize {
        let candidates: &[isize] = if step == 0 { &[0] } else { &[step, -step] };
        for &lag in candidates {
            let s = score(lag);
            if s > best {
                best = s;
                best_lag = lag;
            }
        }
    }

    let overlap = l - best_lag.unsigned_abs();
    let (p0, t0) = if best_lag >= 0 {
        (best_lag as usize, 0)
    } else {
        (0, (-best_lag) as usize)
    };
    Ok(PhaseAligned {
        lag: best_lag,
        pred: pred.slice(p0, overlap)?,
        target: target.slice(t0, overlap)?,
    })
}

/// Windowed period estimation by upward zero crossings.
///
/// Each consecutive window of the mean-removed signal contributes one
/// estimate: the average spacing between upward zero crossings, located
/// with linear sub-sample interpolation. The window should cover at least
/// three expected periods for a stable estimate.
pub fn estimate_period(u: &TimeSeries, window: usize) -> Result<PeriodTrace> {
    if u.channels() != 1 {
        return Err(Error::NotSingleChannel(u.channels()));
    }
    if window < 4 {
        return Err(invalid_param(
            "window",
            format!("window must be at least 4 samples, got {window}"),
        ));
    }
    let v = u.channel(0);
    let mut entries = Vec::new();
    let mut start = 0;
    while start + window <= v.len() {
        let slice = v.rows(start, window);
        let mean = slice.sum() / window as f64;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &val in slice.iter() {
            lo = lo.min(val);
            hi = hi.max(val);
        }

        let mut crossings: Vec<f64> = Vec::new();
        for i in 0..window - 1 {
            let a = slice[i] - mean;
            let b = slice[i + 1] - mean;
            if a < 0.0 && b >= 0.0 {
                crossings.push(i as f64 + (-a) / (b - a));
            }
        }
        let period = if crossings.len() >= 2 {
            let span = crossings.last().unwrap() - crossings.first().unwrap();
            Some(span / (crossings.len() - 1) as f64)
        } else {
            None
        };
        entries.push(PeriodWindow {
            start,
            period,
            amplitude: 0.5 * (hi - lo),
        });
        start += window;
    }
    Ok(PeriodTrace { window, entries })
}

/// Variance along the first principal component of a state trajectory
/// (states column-stacked, N×L), compared against a threshold. A run whose
/// states collapsed to a point scores ~0 and is flagged as failed.
pub fn detect_failure(states: &Matrix, threshold: f64) -> Result<FailureVerdict> {
    if states.ncols() < 2 {
        return Err(Error::DegenerateInput(format!(
            "failure detection needs at least 2 state samples, got {}",
            states.ncols()
        )));
    }
    let samples = states.transpose();
    let p = pca(&samples)?;
    let pc1 = p.variances[0];
    Ok(FailureVerdict {
        failed: pc1 < threshold,
        pc1_variance: pc1,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedRng;
    use crate::signals::{gen_sine, TimeSeries};
    use approx::assert_relative_eq;

    #[test]
    fn nrmse_zero_for_exact_prediction() {
        let t = gen_sine(20.0, 100, 1.0, 0.3).unwrap();
        assert_eq!(nrmse(&t, &t).unwrap(), 0.0);
    }

    #[test]
    fn nrmse_one_for_mean_prediction() {
        let t = crate::signals::gen_multivar_cycle(3, 15.0, 300, 2).unwrap();
        let mut pred = t.data.clone();
        for m in 0..3 {
            let mean = t.data.column(m).sum() / 300.0;
            pred.column_mut(m).fill(mean);
        }
        let pred = TimeSeries::new(pred).unwrap();
        assert_relative_eq!(nrmse(&pred, &t).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn nrmse_half_scale_sine() {
        let t = gen_sine(20.0, 400, 1.0, 0.0).unwrap();
        let pred = TimeSeries::new(&t.data * 0.5).unwrap();
        assert_relative_eq!(nrmse(&pred, &t).unwrap(), 0.5, epsilon = 1e-9);
    }

    #[test]
    fn nrmse_rejects_flat_target() {
        let t = TimeSeries::from_channel(vec![1.0; 10]).unwrap();
        assert!(matches!(
            nrmse(&t, &t),
            Err(Error::ZeroVarianceTarget(0))
        ));
    }

    #[test]
    fn nrmse_invariant_under_channel_permutation() {
        let t = crate::signals::gen_multivar_cycle(4, 12.0, 240, 3).unwrap();
        let mut rng = SeedRng::new(1);
        let noisy = TimeSeries::new(
            t.data.map(|v| v + 0.1) + Matrix::from_fn(240, 4, |_, _| 0.05 * rng.standard_normal()),
        )
        .unwrap();
        let perm = [2usize, 0, 3, 1];
        let permute = |s: &TimeSeries| {
            let mut d = Matrix::zeros(240, 4);
            for (to, &from) in perm.iter().enumerate() {
                d.set_column(to, &s.data.column(from));
            }
            TimeSeries::new(d).unwrap()
        };
        let a = nrmse(&noisy, &t).unwrap();
        let b = nrmse(&permute(&noisy), &permute(&t)).unwrap();
        assert_relative_eq!(a, b, epsilon = 1e-12);
    }

    #[test]
    fn phase_align_identity() {
        let t = gen_sine(20.0, 200, 1.0, 0.0).unwrap();
        let r = phase_align(&t, &t, 10).unwrap();
        assert_eq!(r.lag, 0);
        assert_eq!(r.pred.len(), 200);
    }

    #[test]
    fn phase_align_recovers_constructed_shift() {
        let base = gen_sine(23.0, 300, 1.0, 0.0).unwrap();
        // pred runs 5 steps behind: pred[k] = target[k−5].
        let target = base.slice(5, 280).unwrap();
        let pred = base.slice(0, 280).unwrap();
        let r = phase_align(&pred, &target, 11).unwrap();
        assert_eq!(r.lag, 5);
        assert!(nrmse(&r.pred, &r.target).unwrap() < 1e-10);

        let rev = phase_align(&target, &pred, 11).unwrap();
        assert_eq!(rev.lag, -5);
    }

    #[test]
    fn phase_align_too_short() {
        let t = gen_sine(5.0, 8, 1.0, 0.0).unwrap();
        assert!(matches!(
            phase_align(&t, &t, 7),
            Err(Error::SeriesTooShort { .. })
        ));
    }

    #[test]
    fn phase_align_survives_noise() {
        // Noisy shifted copies: the true shift must be recovered in at
        // least 95 of 100 seeded trials.
        let mut hits = 0;
        for seed in 0..100 {
            let mut rng = SeedRng::new(10_000 + seed);
            let base = gen_sine(19.0, 400, 1.0, rng.uniform(0.0, 6.0)).unwrap();
            let target = base.slice(7, 380).unwrap();
            let noisy: Vec<f64> = base
                .slice(0, 380)
                .unwrap()
                .channel(0)
                .iter()
                .map(|v| v + 0.1 * rng.standard_normal())
                .collect();
            let pred = TimeSeries::from_channel(noisy).unwrap();
            // max_lag 10 keeps the period-19 alias of the true shift
            // (7 − 19 = −12) out of the search range.
            if phase_align(&pred, &target, 10).unwrap().lag == 7 {
                hits += 1;
            }
        }
        assert!(hits >= 95, "recovered shift in only {hits}/100 trials");
    }

    #[test]
    fn period_of_pure_sine() {
        let t = gen_sine(20.0, 1000, 1.0, 0.0).unwrap();
        let trace = estimate_period(&t, 200).unwrap();
        assert_eq!(trace.entries.len(), 5);
        for e in &trace.entries {
            let p = e.period.expect("sine window must be defined");
            assert!((p - 20.0).abs() < 0.05, "period {p}");
            assert_relative_eq!(e.amplitude, 1.0, epsilon = 1e-3);
        }
    }

    #[test]
    fn period_scale_invariance() {
        let t = gen_sine(27.0, 800, 1.0, 0.5).unwrap();
        let scaled = TimeSeries::new(&t.data * 37.5).unwrap();
        let a = estimate_period(&t, 160).unwrap();
        let b = estimate_period(&scaled, 160).unwrap();
        for (x, y) in a.entries.iter().zip(b.entries.iter()) {
            assert_relative_eq!(x.period.unwrap(), y.period.unwrap(), epsilon = 1e-9);
            assert_relative_eq!(y.amplitude, 37.5 * x.amplitude, max_relative = 1e-12);
        }
    }

    #[test]
    fn period_undefined_on_constant_signal() {
        let t = TimeSeries::from_channel(vec![0.7; 600]).unwrap();
        let trace = estimate_period(&t, 150).unwrap();
        assert!(trace.entries.iter().all(|e| e.period.is_none()));
        assert!(!trace.all_defined());
    }

    #[test]
    fn period_rejects_multichannel() {
        let t = crate::signals::gen_multivar_cycle(2, 10.0, 100, 1).unwrap();
        assert!(matches!(
            estimate_period(&t, 50),
            Err(Error::NotSingleChannel(2))
        ));
    }

    #[test]
    fn period_tracks_a_chirp() {
        // Instantaneous period swept linearly 20 → 35 by phase
        // accumulation; windowed estimates must rise monotonically
        // (within resolution) and span most of the sweep.
        let steps = 3000;
        let mut phase = 0.0_f64;
        let mut vals = Vec::with_capacity(steps);
        for n in 0..steps {
            let t_inst = 20.0 + 15.0 * n as f64 / steps as f64;
            vals.push(phase.sin());
            phase += 2.0 * std::f64::consts::PI / t_inst;
        }
        let u = TimeSeries::from_channel(vals).unwrap();
        let trace = estimate_period(&u, 150).unwrap();
        assert!(trace.all_defined());
        let periods: Vec<f64> = trace.entries.iter().map(|e| e.period.unwrap()).collect();
        for w in periods.windows(2) {
            assert!(w[1] >= w[0] - 0.5, "trace dipped: {} -> {}", w[0], w[1]);
        }
        assert!(periods[0] < 22.0);
        assert!(*periods.last().unwrap() > 31.0);
    }

    #[test]
    fn failure_on_frozen_states() {
        let states = Matrix::from_fn(6, 50, |i, _| i as f64 * 0.1);
        let v = detect_failure(&states, 1.0).unwrap();
        assert!(v.failed);
        assert!(v.pc1_variance < 1e-12);
    }

    #[test]
    fn circle_variance_is_half_radius_squared() {
        // States on a circle of radius 2 embedded in 2-D: each coordinate
        // is 2·cos/sin, whose variance over full turns is r²/2 = 2.
        let l = 1000;
        let states = Matrix::from_fn(2, l, |i, k| {
            let th = 2.0 * std::f64::consts::PI * (k as f64) * 10.0 / l as f64;
            if i == 0 {
                2.0 * th.cos()
            } else {
                2.0 * th.sin()
            }
        });
        let v = detect_failure(&states, 1.0).unwrap();
        assert!(!v.failed);
        assert!((v.pc1_variance - 2.0).abs() < 0.02, "pc1 {}", v.pc1_variance);
    }

    #[test]
    fn failure_detection_rotation_invariant() {
        let mut rng = SeedRng::new(17);
        let states = rng.normal_matrix(8, 200);
        // Orthogonalize a random matrix for the rotation.
        let q = {
            let m = rng.normal_matrix(8, 8);
            let qr = m.qr();
            qr.q()
        };
        let rotated = &q * &states;
        let a = detect_failure(&states, 1.0).unwrap();
        let b = detect_failure(&rotated, 1.0).unwrap();
        assert_relative_eq!(a.pc1_variance, b.pc1_variance, max_relative = 1e-8);
    }

    #[test]
    fn generated_sine_meets_period_oracle() {
        let t = gen_sine(20.0, 400, 1.0, 0.0).unwrap();
        let trace = estimate_period(&t, 400).unwrap();
        let p = trace.entries[0].period.unwrap();
        assert!((p - 20.0).abs() < 0.05);
    }
}
