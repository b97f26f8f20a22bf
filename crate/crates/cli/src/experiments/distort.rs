//! Robustness against input distortion: train one random-feature layer to
//! predict a two-sine signal one step ahead, replicate it into a stack fed
//! a gain/offset-distorted copy, and score every layer's output against
//! the clean signal. With conceptor adaptation on, each layer re-centers
//! its working subspace and the stack progressively restores the signal;
//! frozen conceptors pass the distortion through.

use std::path::Path;

use ccl_core::metrics::{nrmse, phase_align};
use ccl_core::rfc::{hierarchy_step, rfc_init, train_rfc_layer, Hierarchy, RfcLayer, RfcTrainSpec};
use ccl_core::signals::{distort, gen_two_sine, save_csv, DistortionSpec, TimeSeries};

use crate::config::{DistortCfg, Mode};
use crate::error::CliResult;
use crate::experiments::write_text;
use crate::table::{emit_plot_script, Cell, PlotKind, ResultTable};

/// Clean driving signal long enough for training and the scored run.
pub fn clean_signal(cfg: &DistortCfg) -> CliResult<TimeSeries> {
    let len = (cfg.run_steps + cfg.layers).max(cfg.fit_len.max(cfg.target_len) + 1);
    Ok(gen_two_sine(len)?)
}

pub fn trained_layer(cfg: &DistortCfg, signal: &TimeSeries) -> CliResult<RfcLayer> {
    let mut layer = rfc_init(cfg.n, cfg.n_rfc, cfg.rho, cfg.rho_in, cfg.rho_b, cfg.seed)?;
    let spec = RfcTrainSpec {
        gamma: cfg.gamma,
        reg: cfg.reg,
        washout: cfg.washout,
        target_len: cfg.target_len,
        target_iters: cfg.target_iters,
        fit_len: cfg.fit_len,
        expansion_scale: cfg.expansion_scale,
        train_noise: cfg.train_noise,
        noise_seed: cfg.noise_seed,
        eta: cfg.eta,
        beta: cfg.beta,
    };
    train_rfc_layer(&mut layer, signal, &spec)?;
    Ok(layer)
}

/// Drive the replicated stack with the distorted signal and record every
/// layer's output over the scored window.
pub fn run_stack(
    cfg: &DistortCfg,
    layer: &RfcLayer,
    signal: &TimeSeries,
    adaptive: bool,
) -> CliResult<Vec<Vec<f64>>> {
    let spec = DistortionSpec::new(cfg.gain, cfg.offset, cfg.onset)?;
    let dist = distort(signal, &spec);
    let mut h = Hierarchy::new(layer, cfg.layers, cfg.eta, cfg.beta, adaptive)?;
    let mut outs: Vec<Vec<f64>> = vec![Vec::new(); cfg.layers];
    for k in 0..cfg.run_steps {
        let ys = hierarchy_step(&mut h, &dist.at(k))?;
        if k >= cfg.measure_from {
            for (j, y) in ys.iter().enumerate() {
                outs[j].push(y[0]);
            }
        }
    }
    Ok(outs)
}

/// Layer j is a chain of j+1 one-step predictors, so its output at step k
/// estimates u(k+1+j); score each layer against its own shifted target.
pub fn layer_errors(
    cfg: &DistortCfg,
    outs: &[Vec<f64>],
    signal: &TimeSeries,
) -> CliResult<Vec<f64>> {
    let mut errs = Vec::with_capacity(outs.len());
    for (j, out) in outs.iter().enumerate() {
        let t: Vec<f64> = (cfg.measure_from..cfg.run_steps)
            .map(|k| signal.data[(k + 1 + j, 0)])
            .collect();
        let pred = TimeSeries::from_channel(out.clone())?;
        let targ = TimeSeries::from_channel(t)?;
        let al = phase_align(&pred, &targ, cfg.max_lag)?;
        errs.push(nrmse(&al.pred, &al.target)?);
    }
    Ok(errs)
}

pub struct Condition {
    pub outs: Vec<Vec<f64>>,
    pub errs: Vec<f64>,
}

pub struct Outcome {
    pub ccl: Option<Condition>,
    pub frozen: Option<Condition>,
}

pub fn execute(cfg: &DistortCfg) -> CliResult<Outcome> {
    let signal = clean_signal(cfg)?;
    let layer = trained_layer(cfg, &signal)?;
    let condition = |adaptive: bool| -> CliResult<Condition> {
        let outs = run_stack(cfg, &layer, &signal, adaptive)?;
        let errs = layer_errors(cfg, &outs, &signal)?;
        Ok(Condition { outs, errs })
    };
    Ok(Outcome {
        ccl: if cfg.mode.runs_ccl() { Some(condition(true)?) } else { None },
        frozen: if cfg.mode.runs_static() { Some(condition(false)?) } else { None },
    })
}

pub fn error_table(cfg: &DistortCfg, outcome: &Outcome) -> CliResult<ResultTable> {
    let mut table = ResultTable::new(&["layer", "nrmse_ccl", "nrmse_static"]);
    let pick = |c: &Option<Condition>, j: usize| {
        c.as_ref().map_or(Cell::Null, |c| Cell::Float(c.errs[j]))
    };
    for j in 0..cfg.layers {
        table.push(vec![
            Cell::Int(j as i64 + 1),
            pick(&outcome.ccl, j),
            pick(&outcome.frozen, j),
        ])?;
    }
    table.sort_rows();
    Ok(table)
}

pub fn output_table(cfg: &DistortCfg, outcome: &Outcome) -> CliResult<ResultTable> {
    let mut table = ResultTable::new(&["k", "layer", "mode", "y"]);
    let mut emit = |mode: Mode, c: &Option<Condition>| -> CliResult<()> {
        if let Some(c) = c {
            for (j, out) in c.outs.iter().enumerate() {
                for (i, &y) in out.iter().enumerate() {
                    table.push(vec![
                        Cell::Int((cfg.measure_from + i) as i64),
                        Cell::Int(j as i64 + 1),
                        Cell::Str(mode.as_str().into()),
                        Cell::Float(y),
                    ])?;
                }
            }
        }
        Ok(())
    };
    emit(Mode::Ccl, &outcome.ccl)?;
    emit(Mode::Static, &outcome.frozen)?;
    table.sort_rows();
    Ok(table)
}

pub fn run(cfg: &DistortCfg, out: &Path) -> CliResult<()> {
    let outcome = execute(cfg)?;
    let errors = error_table(cfg, &outcome)?;
    let outputs = output_table(cfg, &outcome)?;
    errors.emit_csv(&out.join("fig6.csv"))?;
    outputs.emit_csv(&out.join("fig6_output.csv"))?;
    emit_plot_script(&errors, "fig6.csv", PlotKind::DistortionLayers, &out.join("fig6.gp"))?;
    write_text(&out.join("distort_config.txt"), &cfg.snapshot())?;
    Ok(())
}

/// Train the layer and save its conceptor target as a one-channel series.
pub fn dump_conceptors(cfg: &DistortCfg, out: &Path) -> CliResult<()> {
    let signal = clean_signal(cfg)?;
    let layer = trained_layer(cfg, &signal)?;
    let values: Vec<f64> = layer.c_adapt.c.iter().copied().collect();
    let series = TimeSeries::from_channel(values)?.with_labels(vec!["c".into()])?;
    save_csv(&series, &out.join("c_target.csv"))?;
    Ok(())
}
