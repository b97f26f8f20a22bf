//! Stabilization against partial network degradation: train a reservoir
//! to regenerate a multichannel cycle, then clamp a growing set of
//! neurons to zero mid-run. Each trial runs with the conceptor frozen at
//! its target and with the control loop adapting it, and is scored for
//! outright failure (leading-PC variance collapse) and for replay error
//! against the undegraded loop.

use std::path::Path;

use ccl_core::conceptor::{
    conceptor_from_states, merged_ccl_step_mut, save_conceptor, CclParams, Conceptor,
};
use ccl_core::metrics::{detect_failure, nrmse, phase_align};
use ccl_core::reservoir::{
    apply_degradation_mut, autonomous_step_mut, drive_step_mut, harvest, init_reservoir,
    DegradationMask, Readout, ReservoirParams, ReservoirState,
};
use ccl_core::rng::SeedRng;
use ccl_core::signals::{gen_multivar_cycle, load_csv};
use ccl_core::signals::TimeSeries;
use ccl_core::Matrix;

use crate::config::{DegradeCfg, Mode};
use crate::error::CliResult;
use crate::experiments::write_text;
use crate::table::{emit_plot_script, Cell, PlotKind, ResultTable};

pub struct Setup {
    pub p: ReservoirParams,
    pub readout: Readout,
    pub c_target: Conceptor,
    pub warm: ReservoirState,
}

pub fn build(cfg: &DegradeCfg) -> CliResult<Setup> {
    let u = match &cfg.data {
        Some(path) => load_csv(path)?,
        None => gen_multivar_cycle(cfg.channels, cfg.period, cfg.series_len, cfg.seed)?,
    };
    let p = init_reservoir(
        cfg.n,
        cfg.alpha,
        cfg.rho,
        cfg.rho_in,
        cfg.rho_b,
        u.channels(),
        cfg.seed,
    )?;
    let (states, targets) = harvest(&p, &u, cfg.washout)?;
    let readout = Readout::fit(&states, &targets, cfg.reg)?;
    let c_target = conceptor_from_states(&states, cfg.gamma)?;
    let mut warm = ReservoirState::zero(cfg.n);
    for k in 0..cfg.warmup.min(u.len()) {
        drive_step_mut(&p, &mut warm, &u.at(k))?;
    }
    Ok(Setup {
        p,
        readout,
        c_target,
        warm,
    })
}

pub struct RunOutcome {
    pub pc1: f64,
    pub failed: bool,
    pub y: TimeSeries,
}

/// Run the closed loop from the warmed state, optionally clamping masked
/// neurons after every update, and judge the recorded window.
pub fn degraded_run(
    su: &Setup,
    cfg: &DegradeCfg,
    mask: Option<&DegradationMask>,
    adaptive: bool,
) -> CliResult<RunOutcome> {
    let mut s = su.warm.clone();
    let mut c = su.c_target.clone();
    let params = CclParams::new(cfg.eta, cfg.beta, cfg.gamma, su.c_target.clone())?;
    let channels = su.p.m_in;
    let mut ys = Matrix::zeros(cfg.eval_window, channels);
    let mut xs = Matrix::zeros(su.p.n, cfg.eval_window);
    for k in 0..cfg.transient + cfg.eval_window {
        if adaptive {
            merged_ccl_step_mut(&mut c, &s.x, &params)?;
        }
        let y = autonomous_step_mut(&su.p, &mut s, &su.readout, Some(&c))?;
        if let Some(m) = mask {
            apply_degradation_mut(&mut s, m)?;
        }
        if k >= cfg.transient {
            ys.row_mut(k - cfg.transient).copy_from(&y.transpose());
            xs.set_column(k - cfg.transient, &s.x);
        }
    }
    let verdict = detect_failure(&xs, cfg.threshold)?;
    Ok(RunOutcome {
        pc1: verdict.pc1_variance,
        failed: verdict.failed || !verdict.pc1_variance.is_finite(),
        y: TimeSeries::new(ys)?,
    })
}

/// Replay error of a surviving run against the undegraded baseline over
/// the short scoring window, best phase alignment within max_lag.
fn replay_error(cfg: &DegradeCfg, run: &RunOutcome, baseline: &RunOutcome) -> CliResult<f64> {
    let pred = run.y.slice(0, cfg.nrmse_window)?;
    let target = baseline.y.slice(0, cfg.nrmse_window)?;
    let al = phase_align(&pred, &target, cfg.max_lag)?;
    nrmse(&al.pred, &al.target)
}

pub struct TrialRow {
    pub k_removed: usize,
    pub trial: usize,
    pub mode: Mode,
    pub outcome: RunOutcome,
    pub nrmse: Option<f64>,
}

pub fn execute(cfg: &DegradeCfg) -> CliResult<Vec<TrialRow>> {
    let su = build(cfg)?;
    let baseline = degraded_run(&su, cfg, None, false)?;
    let mut rows = Vec::new();
    for (k_idx, &k_removed) in cfg.k_list.iter().enumerate() {
        for trial in 0..cfg.trials {
            // One mask per (k, trial) cell, shared by both conditions.
            let idx = (k_idx * cfg.trials + trial) as u64;
            let mut rng = SeedRng::new(cfg.seed ^ idx);
            let mask = DegradationMask::random(cfg.n, k_removed, &mut rng)?;
            let mut conditions = Vec::new();
            if cfg.mode.runs_static() {
                conditions.push((Mode::Static, false));
            }
            if cfg.mode.runs_ccl() {
                conditions.push((Mode::Ccl, true));
            }
            for (mode, adaptive) in conditions {
                let outcome = degraded_run(&su, cfg, Some(&mask), adaptive)?;
                let nrmse = if outcome.failed {
                    None
                } else {
                    Some(replay_error(cfg, &outcome, &baseline)?)
                };
                rows.push(TrialRow {
                    k_removed,
                    trial,
                    mode,
                    outcome,
                    nrmse,
                });
            }
        }
    }
    Ok(rows)
}

pub fn trial_table(rows: &[TrialRow]) -> CliResult<ResultTable> {
    let mut table =
        ResultTable::new(&["k_removed", "trial", "mode", "failed", "pc1_variance", "nrmse"]);
    for r in rows {
        table.push(vec![
            Cell::Int(r.k_removed as i64),
            Cell::Int(r.trial as i64),
            Cell::Str(r.mode.as_str().into()),
            Cell::Int(r.outcome.failed as i64),
            if r.outcome.pc1.is_finite() {
                Cell::Float(r.outcome.pc1)
            } else {
                Cell::Null
            },
            r.nrmse.map_or(Cell::Null, Cell::Float),
        ])?;
    }
    table.sort_rows();
    Ok(table)
}

pub fn run(cfg: &DegradeCfg, out: &Path) -> CliResult<()> {
    let rows = execute(cfg)?;
    let table = trial_table(&rows)?;
    table.emit_csv(&out.join("fig5.csv"))?;
    emit_plot_script(&table, "fig5.csv", PlotKind::DegradationSummary, &out.join("fig5.gp"))?;
    write_text(&out.join("degrade_config.txt"), &cfg.snapshot())?;
    Ok(())
}

pub fn dump_conceptors(cfg: &DegradeCfg, out: &Path) -> CliResult<()> {
    let su = build(cfg)?;
    save_conceptor(&su.c_target, &out.join("c_target.cpt"))?;
    Ok(())
}
