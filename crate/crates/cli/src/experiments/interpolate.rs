//! Temporal-pattern interpolation: train one reservoir on two sine
//! periods, then morph the loaded conceptor from the first to the second
//! under a slow linear schedule while the loop runs autonomously. The
//! static condition applies the blended conceptor directly; the adaptive
//! condition lets the control loop chase it, which keeps the state cloud
//! on-manifold through the morph.

use std::path::Path;

use ccl_core::conceptor::{
    conceptor_from_states, constrained_step_mut, interpolate_conceptors, merged_ccl_step_mut,
    save_conceptor, CclParams, Conceptor,
};
use ccl_core::metrics::estimate_period;
use ccl_core::reservoir::{
    autonomous_step_mut, harvest, init_reservoir, Readout, ReservoirParams, ReservoirState,
};
use ccl_core::signals::{gen_sine, TimeSeries};
use ccl_core::Matrix;

use crate::config::{InterpolateCfg, Mode};
use crate::error::CliResult;
use crate::experiments::write_text;
use crate::table::{emit_plot_script, Cell, PlotKind, ResultTable};

/// One trained system morphing toward a single end period.
pub struct Setup {
    pub p: ReservoirParams,
    pub readout: Readout,
    pub c0: Conceptor,
    pub c1: Conceptor,
    pub start: ReservoirState,
    /// Mean squared state norm over the training states; the adaptive
    /// learning rate is normalized by it so one eta works across sizes.
    pub mean_sq: f64,
}

pub fn build(cfg: &InterpolateCfg, t1: f64) -> CliResult<Setup> {
    let p = init_reservoir(cfg.n, cfg.alpha, cfg.rho, cfg.rho_in, cfg.rho_b, 1, cfg.seed)?;
    let len = cfg.washout + cfg.harvest_len + 1;
    let u0 = gen_sine(cfg.t0, len, 1.0, 0.0)?;
    let u1 = gen_sine(t1, len, 1.0, 0.0)?;
    let (s0, t0t) = harvest(&p, &u0, cfg.washout)?;
    let (s1, t1t) = harvest(&p, &u1, cfg.washout)?;

    let pairs = s0.ncols();
    let mut stacked = Matrix::zeros(cfg.n, 2 * pairs);
    stacked.columns_mut(0, pairs).copy_from(&s0);
    stacked.columns_mut(pairs, pairs).copy_from(&s1);
    let mean_sq =
        stacked.column_iter().map(|c| c.norm_squared()).sum::<f64>() / stacked.ncols() as f64;
    let mut targets = Matrix::zeros(2 * pairs, 1);
    targets.rows_mut(0, pairs).copy_from(&t0t.data);
    targets.rows_mut(pairs, pairs).copy_from(&t1t.data);
    let readout = Readout::fit(&stacked, &TimeSeries::new(targets)?, cfg.reg)?;

    let c0 = conceptor_from_states(&s0, cfg.gamma)?;
    let c1 = conceptor_from_states(&s1, cfg.gamma)?;

    let mut start = ReservoirState::zero(cfg.n);
    for k in 0..cfg.warmup {
        constrained_step_mut(&p, &mut start, &u0.at(k), &c0)?;
    }
    Ok(Setup {
        p,
        readout,
        c0,
        c1,
        start,
        mean_sq,
    })
}

/// Close the loop and ramp lambda from 0 to 1, then hold for the tail.
/// Returns the output trace; it ends early if the state leaves f64 range.
pub fn run_ramp(su: &Setup, cfg: &InterpolateCfg, adaptive: bool) -> CliResult<Vec<f64>> {
    let total = (1.0 / cfg.lambda_rate).ceil() as usize + cfg.tail;
    let eta_eff = cfg.eta / (su.mean_sq + cfg.gamma.powi(-2));
    let mut s = su.start.clone();
    let mut c = su.c0.clone();
    let mut ys = Vec::with_capacity(total);
    for k in 0..total {
        let lambda = (cfg.lambda_rate * k as f64).min(1.0);
        let target = interpolate_conceptors(&su.c0, &su.c1, lambda)?;
        if adaptive {
            let params = CclParams::new(eta_eff, cfg.beta, cfg.gamma, target)?;
            merged_ccl_step_mut(&mut c, &s.x, &params)?;
        } else {
            c = target;
        }
        let y = autonomous_step_mut(&su.p, &mut s, &su.readout, Some(&c))?;
        if !y[0].is_finite() || !s.x.iter().all(|v| v.is_finite()) {
            break;
        }
        ys.push(y[0]);
    }
    Ok(ys)
}

pub struct ModeTrace {
    pub mode: Mode,
    pub t1: f64,
    pub ys: Vec<f64>,
}

pub fn execute(cfg: &InterpolateCfg) -> CliResult<Vec<ModeTrace>> {
    let mut traces = Vec::new();
    for &t1 in &cfg.t1 {
        let su = build(cfg, t1)?;
        if cfg.mode.runs_static() {
            traces.push(ModeTrace {
                mode: Mode::Static,
                t1,
                ys: run_ramp(&su, cfg, false)?,
            });
        }
        if cfg.mode.runs_ccl() {
            traces.push(ModeTrace {
                mode: Mode::Ccl,
                t1,
                ys: run_ramp(&su, cfg, true)?,
            });
        }
    }
    Ok(traces)
}

pub fn period_table(cfg: &InterpolateCfg, traces: &[ModeTrace]) -> CliResult<ResultTable> {
    let mut table =
        ResultTable::new(&["window_start", "lambda", "mode", "t1", "period", "amplitude"]);
    for tr in traces {
        if tr.ys.len() < cfg.period_window {
            continue;
        }
        let series = TimeSeries::from_channel(tr.ys.clone())?;
        let trace = estimate_period(&series, cfg.period_window)?;
        for e in &trace.entries {
            let lambda = (cfg.lambda_rate * e.start as f64).min(1.0);
            table.push(vec![
                Cell::Int(e.start as i64),
                Cell::Float(lambda),
                Cell::Str(tr.mode.as_str().into()),
                Cell::Float(tr.t1),
                e.period.map_or(Cell::Null, Cell::Float),
                Cell::Float(e.amplitude),
            ])?;
        }
    }
    table.sort_rows();
    Ok(table)
}

pub fn output_table(cfg: &InterpolateCfg, traces: &[ModeTrace]) -> CliResult<ResultTable> {
    let mut table = ResultTable::new(&["k", "lambda", "mode", "t1", "y"]);
    for tr in traces {
        for (k, &y) in tr.ys.iter().enumerate().step_by(cfg.output_stride) {
            let lambda = (cfg.lambda_rate * k as f64).min(1.0);
            table.push(vec![
                Cell::Int(k as i64),
                Cell::Float(lambda),
                Cell::Str(tr.mode.as_str().into()),
                Cell::Float(tr.t1),
                Cell::Float(y),
            ])?;
        }
    }
    table.sort_rows();
    Ok(table)
}

pub fn run(cfg: &InterpolateCfg, out: &Path) -> CliResult<()> {
    let traces = execute(cfg)?;
    let periods = period_table(cfg, &traces)?;
    let outputs = output_table(cfg, &traces)?;
    outputs.emit_csv(&out.join("fig3_output.csv"))?;
    periods.emit_csv(&out.join("fig3_period.csv"))?;
    emit_plot_script(
        &periods,
        "fig3_period.csv",
        PlotKind::InterpolationPeriod,
        &out.join("fig3.gp"),
    )?;
    emit_plot_script(
        &periods,
        "fig3_period.csv",
        PlotKind::InterpolationExtended,
        &out.join("fig4ext.gp"),
    )?;
    write_text(&out.join("interpolate_config.txt"), &cfg.snapshot())?;
    Ok(())
}

/// Train for the first end period and save both conceptors.
pub fn dump_conceptors(cfg: &InterpolateCfg, out: &Path) -> CliResult<()> {
    let su = build(cfg, cfg.t1[0])?;
    save_conceptor(&su.c0, &out.join("c0.cpt"))?;
    save_conceptor(&su.c1, &out.join("c1.cpt"))?;
    Ok(())
}
