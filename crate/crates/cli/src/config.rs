//! Experiment configuration: a flat `key = value` text format with one
//! section per experiment, parsed into fully validated parameter sets.
//! Defaults reproduce the published hyperparameter table for each
//! experiment; a config file only needs the keys it wants to override.
//!
//! Format rules: blank lines and lines starting with `#` are skipped;
//! `[interpolate]`, `[degrade]`, `[distort]` open a section; keys before
//! any section apply to every experiment, section keys override them.
//! Lists are comma-separated. Every key is validated; unknown keys and
//! out-of-range values are errors naming the key.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;

use crate::error::{config_err, io_err, CliResult};

/// Which closed-loop conditions a run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Static,
    Ccl,
    Both,
}

impl Mode {
    pub fn runs_static(self) -> bool {
        matches!(self, Mode::Static | Mode::Both)
    }

    pub fn runs_ccl(self) -> bool {
        matches!(self, Mode::Ccl | Mode::Both)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Static => "static",
            Mode::Ccl => "ccl",
            Mode::Both => "both",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExperimentKind {
    Interpolate,
    Degrade,
    Distort,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Interpolate => "interpolate",
            ExperimentKind::Degrade => "degrade",
            ExperimentKind::Distort => "distort",
        }
    }

    fn from_section(name: &str) -> Option<ExperimentKind> {
        match name {
            "interpolate" => Some(ExperimentKind::Interpolate),
            "degrade" => Some(ExperimentKind::Degrade),
            "distort" => Some(ExperimentKind::Distort),
            _ => None,
        }
    }
}

/// Parsed but untyped config text: global keys plus per-section keys.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    global: BTreeMap<String, String>,
    sections: BTreeMap<&'static str, BTreeMap<String, String>>,
}

impl RawConfig {
    pub fn parse_file(path: &Path) -> CliResult<RawConfig> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Self::parse_str(&text)
    }

    pub fn parse_str(text: &str) -> CliResult<RawConfig> {
        let mut raw = RawConfig::default();
        let mut section: Option<&'static str> = None;
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            let lineno = idx + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| config_err(format!("line {lineno}: unterminated section header")))?
                    .trim();
                let kind = ExperimentKind::from_section(name).ok_or_else(|| {
                    config_err(format!(
                        "line {lineno}: unknown section `{name}` (expected interpolate, degrade, or distort)"
                    ))
                })?;
                section = Some(kind.as_str());
                raw.sections.entry(kind.as_str()).or_default();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                config_err(format!("line {lineno}: expected `key = value`, got `{line}`"))
            })?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_') {
                return Err(config_err(format!(
                    "line {lineno}: invalid key `{key}` (lowercase, digits, underscores)"
                )));
            }
            if value.is_empty() {
                return Err(config_err(format!(
                    "line {lineno}: empty value for key `{key}` (omit the key to keep the default)"
                )));
            }
            let scope = match section {
                Some(name) => raw.sections.get_mut(name).unwrap(),
                None => &mut raw.global,
            };
            if scope.insert(key.to_string(), value.to_string()).is_some() {
                return Err(config_err(format!("line {lineno}: duplicate key `{key}`")));
            }
        }
        Ok(raw)
    }

    /// Global keys overlaid with the experiment's section keys.
    fn bag(&self, kind: ExperimentKind) -> KeyBag {
        let mut map = self.global.clone();
        if let Some(section) = self.sections.get(kind.as_str()) {
            for (k, v) in section {
                map.insert(k.clone(), v.clone());
            }
        }
        KeyBag { map }
    }
}

/// Key-to-value view consumed by the typed builders; leftovers after
/// building are unknown keys and rejected wholesale.
struct KeyBag {
    map: BTreeMap<String, String>,
}

impl KeyBag {
    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    fn f64(&mut self, key: &str, target: &mut f64) -> CliResult<()> {
        if let Some(v) = self.take(key) {
            *target = v
                .parse()
                .map_err(|_| config_err(format!("key `{key}`: `{v}` is not a number")))?;
        }
        Ok(())
    }

    fn u64(&mut self, key: &str, target: &mut u64) -> CliResult<()> {
        if let Some(v) = self.take(key) {
            *target = v
                .parse()
                .map_err(|_| config_err(format!("key `{key}`: `{v}` is not an unsigned integer")))?;
        }
        Ok(())
    }

    fn usize(&mut self, key: &str, target: &mut usize) -> CliResult<()> {
        if let Some(v) = self.take(key) {
            *target = v
                .parse()
                .map_err(|_| config_err(format!("key `{key}`: `{v}` is not an unsigned integer")))?;
        }
        Ok(())
    }

    fn f64_list(&mut self, key: &str, target: &mut Vec<f64>) -> CliResult<()> {
        if let Some(v) = self.take(key) {
            let parsed: Result<Vec<f64>, _> = v.split(',').map(|s| s.trim().parse()).collect();
            *target = parsed
                .map_err(|_| config_err(format!("key `{key}`: `{v}` is not a comma-separated list of numbers")))?;
        }
        Ok(())
    }

    fn usize_list(&mut self, key: &str, target: &mut Vec<usize>) -> CliResult<()> {
        if let Some(v) = self.take(key) {
            let parsed: Result<Vec<usize>, _> = v.split(',').map(|s| s.trim().parse()).collect();
            *target = parsed.map_err(|_| {
                config_err(format!("key `{key}`: `{v}` is not a comma-separated list of unsigned integers"))
            })?;
        }
        Ok(())
    }

    fn path(&mut self, key: &str, target: &mut Option<PathBuf>) -> CliResult<()> {
        if let Some(v) = self.take(key) {
            *target = Some(PathBuf::from(v));
        }
        Ok(())
    }

    fn mode(&mut self, target: &mut Mode) -> CliResult<()> {
        if let Some(v) = self.take("mode") {
            *target = match v.as_str() {
                "static" => Mode::Static,
                "ccl" => Mode::Ccl,
                "both" => Mode::Both,
                _ => {
                    return Err(config_err(format!(
                        "key `mode`: `{v}` is not one of static, ccl, both"
                    )))
                }
            };
        }
        Ok(())
    }

    fn finish(self, kind: ExperimentKind) -> CliResult<()> {
        if let Some(key) = self.map.keys().next() {
            return Err(config_err(format!(
                "unknown key `{key}` for experiment `{}`",
                kind.as_str()
            )));
        }
        Ok(())
    }
}

fn check(cond: bool, field: &str, reason: &str) -> CliResult<()> {
    if cond {
        Ok(())
    } else {
        Err(config_err(format!("key `{field}`: {reason}")))
    }
}

fn push_kv(out: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "{key} = {value}");
}

/// Pattern interpolation between two trained sine periods under a slow
/// lambda ramp, in the static-blend and adaptive-control conditions.
#[derive(Debug, Clone)]
pub struct InterpolateCfg {
    pub seed: u64,
    pub mode: Mode,
    pub n: usize,
    pub alpha: f64,
    pub rho: f64,
    pub rho_in: f64,
    pub rho_b: f64,
    pub reg: f64,
    pub gamma: f64,
    pub eta: f64,
    pub beta: f64,
    pub t0: f64,
    pub t1: Vec<f64>,
    pub lambda_rate: f64,
    /// Steps appended after lambda reaches 1 so the endpoint is measurable.
    pub tail: usize,
    pub washout: usize,
    pub harvest_len: usize,
    /// Driven steps under the start conceptor before the loop is closed.
    pub warmup: usize,
    pub period_window: usize,
    /// Every how many steps an output row is recorded.
    pub output_stride: usize,
}

impl InterpolateCfg {
    pub fn defaults(seed: u64) -> InterpolateCfg {
        InterpolateCfg {
            seed,
            mode: Mode::Both,
            n: 256,
            alpha: 0.75,
            rho: 1.6,
            rho_in: 1.0,
            rho_b: 1.0,
            reg: 1e-4,
            gamma: 25.0,
            eta: 0.2,
            beta: 2.5e-5,
            t0: 20.0,
            t1: vec![25.0, 30.0, 35.0],
            lambda_rate: 1e-5,
            tail: 20_000,
            washout: 100,
            harvest_len: 1500,
            warmup: 100,
            period_window: 2000,
            output_stride: 20,
        }
    }

    pub fn from_raw(raw: &RawConfig) -> CliResult<InterpolateCfg> {
        let mut cfg = InterpolateCfg::defaults(2);
        let mut bag = raw.bag(ExperimentKind::Interpolate);
        bag.u64("seed", &mut cfg.seed)?;
        bag.mode(&mut cfg.mode)?;
        bag.usize("n", &mut cfg.n)?;
        bag.f64("alpha", &mut cfg.alpha)?;
        bag.f64("rho", &mut cfg.rho)?;
        bag.f64("rho_in", &mut cfg.rho_in)?;
        bag.f64("rho_b", &mut cfg.rho_b)?;
        bag.f64("reg", &mut cfg.reg)?;
        bag.f64("gamma", &mut cfg.gamma)?;
        bag.f64("eta", &mut cfg.eta)?;
        bag.f64("beta", &mut cfg.beta)?;
        bag.f64("t0", &mut cfg.t0)?;
        bag.f64_list("t1", &mut cfg.t1)?;
        bag.f64("lambda_rate", &mut cfg.lambda_rate)?;
        bag.usize("tail", &mut cfg.tail)?;
        bag.usize("washout", &mut cfg.washout)?;
        bag.usize("harvest_len", &mut cfg.harvest_len)?;
        bag.usize("warmup", &mut cfg.warmup)?;
        bag.usize("period_window", &mut cfg.period_window)?;
        bag.usize("output_stride", &mut cfg.output_stride)?;
        bag.finish(ExperimentKind::Interpolate)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        check(self.n >= 2, "n", "reservoir needs at least two units")?;
        check(
            self.alpha > 0.0 && self.alpha <= 1.0,
            "alpha",
            "leak rate must lie in (0, 1]",
        )?;
        check(self.rho > 0.0 && self.rho.is_finite(), "rho", "spectral radius must be positive")?;
        check(self.rho_in.is_finite() && self.rho_b.is_finite(), "rho_in", "scalings must be finite")?;
        check(self.reg >= 0.0 && self.reg.is_finite(), "reg", "ridge constant must be >= 0")?;
        check(self.gamma > 0.0 && self.gamma.is_finite(), "gamma", "aperture must be > 0")?;
        check(self.eta >= 0.0 && self.eta.is_finite(), "eta", "learning rate must be >= 0")?;
        check(
            (0.0..=1.0).contains(&self.beta),
            "beta",
            "control gain must lie in [0, 1]",
        )?;
        check(self.t0 >= 2.0 && self.t0.is_finite(), "t0", "period must be at least 2 samples")?;
        check(!self.t1.is_empty(), "t1", "need at least one end period")?;
        for &t in &self.t1 {
            // The degenerate case t1 = t0 is allowed: both conceptors are
            // then equal and the trace must stay at t0.
            check(
                t.is_finite() && t >= self.t0,
                "t1",
                "end periods must be finite and >= t0",
            )?;
        }
        check(
            self.lambda_rate > 0.0 && self.lambda_rate <= 1.0,
            "lambda_rate",
            "ramp rate must lie in (0, 1]",
        )?;
        check(self.period_window >= 8, "period_window", "window too short to estimate a period")?;
        check(
            self.tail >= self.period_window,
            "tail",
            "tail must cover at least one measurement window",
        )?;
        check(self.washout >= 1, "washout", "washout must be at least 1")?;
        check(self.harvest_len >= 2, "harvest_len", "need at least two harvested states")?;
        check(self.output_stride >= 1, "output_stride", "stride must be at least 1")?;
        Ok(())
    }

    /// Canonical key=value rendering; parseable as a config file.
    pub fn snapshot(&self) -> String {
        let mut s = String::from("[interpolate]\n");
        push_kv(&mut s, "alpha", self.alpha);
        push_kv(&mut s, "beta", self.beta);
        push_kv(&mut s, "eta", self.eta);
        push_kv(&mut s, "gamma", self.gamma);
        push_kv(&mut s, "harvest_len", self.harvest_len);
        push_kv(&mut s, "lambda_rate", self.lambda_rate);
        push_kv(&mut s, "mode", self.mode.as_str());
        push_kv(&mut s, "n", self.n);
        push_kv(&mut s, "output_stride", self.output_stride);
        push_kv(&mut s, "period_window", self.period_window);
        push_kv(&mut s, "reg", self.reg);
        push_kv(&mut s, "rho", self.rho);
        push_kv(&mut s, "rho_b", self.rho_b);
        push_kv(&mut s, "rho_in", self.rho_in);
        push_kv(&mut s, "seed", self.seed);
        push_kv(&mut s, "t0", self.t0);
        let list = self.t1.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", ");
        push_kv(&mut s, "t1", list);
        push_kv(&mut s, "tail", self.tail);
        push_kv(&mut s, "warmup", self.warmup);
        push_kv(&mut s, "washout", self.washout);
        s
    }
}

/// Autonomous pattern regeneration under progressive neuron clamping,
/// with and without the adaptive control loop.
#[derive(Debug, Clone)]
pub struct DegradeCfg {
    pub seed: u64,
    pub mode: Mode,
    pub n: usize,
    pub alpha: f64,
    pub rho: f64,
    pub rho_in: f64,
    pub rho_b: f64,
    pub reg: f64,
    pub gamma: f64,
    pub eta: f64,
    pub beta: f64,
    /// Synthetic-target shape; ignored when `data` is given.
    pub channels: usize,
    pub period: f64,
    pub series_len: usize,
    /// Optional CSV with a multichannel target series.
    pub data: Option<PathBuf>,
    pub k_list: Vec<usize>,
    pub trials: usize,
    pub threshold: f64,
    pub washout: usize,
    pub warmup: usize,
    pub transient: usize,
    /// Autonomous steps recorded for failure detection.
    pub eval_window: usize,
    /// Shorter head of the evaluation used for the error score; long
    /// windows saturate the score once the degraded cycle's period drifts.
    pub nrmse_window: usize,
    pub max_lag: usize,
}

impl DegradeCfg {
    pub fn defaults(seed: u64) -> DegradeCfg {
        DegradeCfg {
            seed,
            mode: Mode::Both,
            n: 500,
            alpha: 0.988,
            rho: 0.749,
            rho_in: 1.149,
            rho_b: 1.5,
            reg: 1000.0,
            gamma: 31.6,
            eta: 0.001,
            beta: 0.7,
            channels: 10,
            period: 40.0,
            series_len: 1701,
            data: None,
            k_list: vec![100, 200, 300, 400, 500, 600, 700],
            trials: 10,
            threshold: 1.0,
            washout: 100,
            warmup: 100,
            transient: 200,
            eval_window: 600,
            nrmse_window: 120,
            max_lag: 60,
        }
    }

    pub fn from_raw(raw: &RawConfig) -> CliResult<DegradeCfg> {
        let mut cfg = DegradeCfg::defaults(2);
        let mut bag = raw.bag(ExperimentKind::Degrade);
        bag.u64("seed", &mut cfg.seed)?;
        bag.mode(&mut cfg.mode)?;
        bag.usize("n", &mut cfg.n)?;
        bag.f64("alpha", &mut cfg.alpha)?;
        bag.f64("rho", &mut cfg.rho)?;
        bag.f64("rho_in", &mut cfg.rho_in)?;
        bag.f64("rho_b", &mut cfg.rho_b)?;
        bag.f64("reg", &mut cfg.reg)?;
        bag.f64("gamma", &mut cfg.gamma)?;
        bag.f64("eta", &mut cfg.eta)?;
        bag.f64("beta", &mut cfg.beta)?;
        bag.usize("channels", &mut cfg.channels)?;
        bag.f64("period", &mut cfg.period)?;
        bag.usize("series_len", &mut cfg.series_len)?;
        bag.path("data", &mut cfg.data)?;
        bag.usize_list("k_list", &mut cfg.k_list)?;
        bag.usize("trials", &mut cfg.trials)?;
        bag.f64("threshold", &mut cfg.threshold)?;
        bag.usize("washout", &mut cfg.washout)?;
        bag.usize("warmup", &mut cfg.warmup)?;
        bag.usize("transient", &mut cfg.transient)?;
        bag.usize("eval_window", &mut cfg.eval_window)?;
        bag.usize("nrmse_window", &mut cfg.nrmse_window)?;
        bag.usize("max_lag", &mut cfg.max_lag)?;
        bag.finish(ExperimentKind::Degrade)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        check(self.n >= 2, "n", "reservoir needs at least two units")?;
        check(
            self.alpha > 0.0 && self.alpha <= 1.0,
            "alpha",
            "leak rate must lie in (0, 1]",
        )?;
        check(self.rho > 0.0 && self.rho.is_finite(), "rho", "spectral radius must be positive")?;
        check(self.rho_in.is_finite() && self.rho_b.is_finite(), "rho_in", "scalings must be finite")?;
        check(self.reg >= 0.0 && self.reg.is_finite(), "reg", "ridge constant must be >= 0")?;
        check(self.gamma > 0.0 && self.gamma.is_finite(), "gamma", "aperture must be > 0")?;
        check(self.eta >= 0.0 && self.eta.is_finite(), "eta", "learning rate must be >= 0")?;
        check(
            (0.0..=1.0).contains(&self.beta),
            "beta",
            "control gain must lie in [0, 1]",
        )?;
        check(self.channels >= 1, "channels", "need at least one channel")?;
        check(self.period >= 2.0 && self.period.is_finite(), "period", "period must be at least 2 samples")?;
        check(
            self.series_len >= self.washout + 2,
            "series_len",
            "series must outlast the washout",
        )?;
        check(!self.k_list.is_empty(), "k_list", "need at least one removal count")?;
        for &k in &self.k_list {
            check(k <= self.n, "k_list", "cannot remove more neurons than the reservoir has")?;
        }
        check(self.trials >= 1, "trials", "need at least one trial")?;
        check(
            self.threshold > 0.0 && self.threshold.is_finite(),
            "threshold",
            "failure threshold must be > 0",
        )?;
        check(self.washout >= 1, "washout", "washout must be at least 1")?;
        check(self.eval_window >= 2, "eval_window", "evaluation window too short")?;
        check(
            self.nrmse_window >= 2 && self.nrmse_window <= self.eval_window,
            "nrmse_window",
            "error window must fit inside the evaluation window",
        )?;
        check(
            self.max_lag < self.nrmse_window,
            "max_lag",
            "alignment search must leave some overlap",
        )?;
        Ok(())
    }

    pub fn snapshot(&self) -> String {
        let mut s = String::from("[degrade]\n");
        push_kv(&mut s, "alpha", self.alpha);
        push_kv(&mut s, "beta", self.beta);
        push_kv(&mut s, "channels", self.channels);
        if let Some(data) = &self.data {
            push_kv(&mut s, "data", data.display());
        }
        push_kv(&mut s, "eta", self.eta);
        push_kv(&mut s, "eval_window", self.eval_window);
        push_kv(&mut s, "gamma", self.gamma);
        let list = self.k_list.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(", ");
        push_kv(&mut s, "k_list", list);
        push_kv(&mut s, "max_lag", self.max_lag);
        push_kv(&mut s, "mode", self.mode.as_str());
        push_kv(&mut s, "n", self.n);
        push_kv(&mut s, "nrmse_window", self.nrmse_window);
        push_kv(&mut s, "period", self.period);
        push_kv(&mut s, "reg", self.reg);
        push_kv(&mut s, "rho", self.rho);
        push_kv(&mut s, "rho_b", self.rho_b);
        push_kv(&mut s, "rho_in", self.rho_in);
        push_kv(&mut s, "seed", self.seed);
        push_kv(&mut s, "series_len", self.series_len);
        push_kv(&mut s, "threshold", self.threshold);
        push_kv(&mut s, "trials", self.trials);
        push_kv(&mut s, "transient", self.transient);
        push_kv(&mut s, "warmup", self.warmup);
        push_kv(&mut s, "washout", self.washout);
        s
    }
}

/// Hierarchical input equalization: a stack of identical trained layers
/// fed a linearly distorted signal, scored per layer against the clean one.
#[derive(Debug, Clone)]
pub struct DistortCfg {
    pub seed: u64,
    pub mode: Mode,
    pub n: usize,
    pub n_rfc: usize,
    pub rho: f64,
    pub rho_in: f64,
    pub rho_b: f64,
    pub reg: f64,
    pub gamma: f64,
    pub eta: f64,
    pub beta: f64,
    pub layers: usize,
    pub gain: f64,
    pub offset: f64,
    pub onset: usize,
    pub run_steps: usize,
    /// First step of the scored window (the stack settles before it).
    pub measure_from: usize,
    pub max_lag: usize,
    pub washout: usize,
    pub target_len: usize,
    pub target_iters: usize,
    pub fit_len: usize,
    pub expansion_scale: f64,
    pub train_noise: f64,
    pub noise_seed: u64,
}

impl DistortCfg {
    pub fn defaults(seed: u64) -> DistortCfg {
        DistortCfg {
            seed,
            mode: Mode::Both,
            n: 50,
            n_rfc: 200,
            rho: 0.9,
            rho_in: 0.9,
            rho_b: 0.2,
            reg: 0.01,
            gamma: 8.0,
            eta: 0.8,
            beta: 4e-3,
            layers: 4,
            gain: 0.3,
            offset: 0.0,
            onset: 0,
            run_steps: 9000,
            measure_from: 6000,
            max_lag: 30,
            washout: 100,
            target_len: 1800,
            target_iters: 10,
            fit_len: 3600,
            expansion_scale: 0.85,
            train_noise: 0.2,
            noise_seed: 901,
        }
    }

    pub fn from_raw(raw: &RawConfig) -> CliResult<DistortCfg> {
        let mut cfg = DistortCfg::defaults(14);
        let mut bag = raw.bag(ExperimentKind::Distort);
        bag.u64("seed", &mut cfg.seed)?;
        bag.mode(&mut cfg.mode)?;
        bag.usize("n", &mut cfg.n)?;
        bag.usize("n_rfc", &mut cfg.n_rfc)?;
        bag.f64("rho", &mut cfg.rho)?;
        bag.f64("rho_in", &mut cfg.rho_in)?;
        bag.f64("rho_b", &mut cfg.rho_b)?;
        bag.f64("reg", &mut cfg.reg)?;
        bag.f64("gamma", &mut cfg.gamma)?;
        bag.f64("eta", &mut cfg.eta)?;
        bag.f64("beta", &mut cfg.beta)?;
        bag.usize("layers", &mut cfg.layers)?;
        bag.f64("gain", &mut cfg.gain)?;
        bag.f64("offset", &mut cfg.offset)?;
        bag.usize("onset", &mut cfg.onset)?;
        bag.usize("run_steps", &mut cfg.run_steps)?;
        bag.usize("measure_from", &mut cfg.measure_from)?;
        bag.usize("max_lag", &mut cfg.max_lag)?;
        bag.usize("washout", &mut cfg.washout)?;
        bag.usize("target_len", &mut cfg.target_len)?;
        bag.usize("target_iters", &mut cfg.target_iters)?;
        bag.usize("fit_len", &mut cfg.fit_len)?;
        bag.f64("expansion_scale", &mut cfg.expansion_scale)?;
        bag.f64("train_noise", &mut cfg.train_noise)?;
        bag.u64("noise_seed", &mut cfg.noise_seed)?;
        bag.finish(ExperimentKind::Distort)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        check(self.n >= 1, "n", "layer needs at least one unit")?;
        check(self.n_rfc >= self.n, "n_rfc", "expansion must not shrink")?;
        check(self.rho > 0.0 && self.rho.is_finite(), "rho", "spectral radius must be positive")?;
        check(self.rho_in.is_finite() && self.rho_b.is_finite(), "rho_in", "scalings must be finite")?;
        check(self.reg >= 0.0 && self.reg.is_finite(), "reg", "ridge constant must be >= 0")?;
        check(self.gamma > 0.0 && self.gamma.is_finite(), "gamma", "aperture must be > 0")?;
        check(self.eta >= 0.0 && self.eta.is_finite(), "eta", "learning rate must be >= 0")?;
        check(
            (0.0..=1.0).contains(&self.beta),
            "beta",
            "control gain must lie in [0, 1]",
        )?;
        check(self.layers >= 1, "layers", "need at least one layer")?;
        check(self.gain.is_finite() && self.offset.is_finite(), "gain", "distortion must be finite")?;
        check(
            self.measure_from >= 1 && self.measure_from < self.run_steps,
            "measure_from",
            "scored window must be a nonempty suffix of the run",
        )?;
        check(
            self.max_lag < self.run_steps - self.measure_from,
            "max_lag",
            "alignment search must leave some overlap",
        )?;
        check(self.washout >= 1, "washout", "washout must be at least 1")?;
        check(
            self.target_len >= self.washout + 2,
            "target_len",
            "target harvest must outlast the washout",
        )?;
        check(self.target_iters >= 1, "target_iters", "need at least one target iteration")?;
        check(
            self.fit_len >= self.washout + 2,
            "fit_len",
            "readout harvest must outlast the washout",
        )?;
        check(
            self.expansion_scale > 0.0 && self.expansion_scale.is_finite(),
            "expansion_scale",
            "rescale must be positive",
        )?;
        check(
            self.train_noise >= 0.0 && self.train_noise.is_finite(),
            "train_noise",
            "noise level must be >= 0",
        )?;
        Ok(())
    }

    pub fn snapshot(&self) -> String {
        let mut s = String::from("[distort]\n");
        push_kv(&mut s, "beta", self.beta);
        push_kv(&mut s, "eta", self.eta);
        push_kv(&mut s, "expansion_scale", self.expansion_scale);
        push_kv(&mut s, "fit_len", self.fit_len);
        push_kv(&mut s, "gain", self.gain);
        push_kv(&mut s, "gamma", self.gamma);
        push_kv(&mut s, "layers", self.layers);
        push_kv(&mut s, "max_lag", self.max_lag);
        push_kv(&mut s, "measure_from", self.measure_from);
        push_kv(&mut s, "mode", self.mode.as_str());
        push_kv(&mut s, "n", self.n);
        push_kv(&mut s, "n_rfc", self.n_rfc);
        push_kv(&mut s, "noise_seed", self.noise_seed);
        push_kv(&mut s, "offset", self.offset);
        push_kv(&mut s, "onset", self.onset);
        push_kv(&mut s, "reg", self.reg);
        push_kv(&mut s, "rho", self.rho);
        push_kv(&mut s, "rho_b", self.rho_b);
        push_kv(&mut s, "rho_in", self.rho_in);
        push_kv(&mut s, "run_steps", self.run_steps);
        push_kv(&mut s, "seed", self.seed);
        push_kv(&mut s, "target_iters", self.target_iters);
        push_kv(&mut s, "target_len", self.target_len);
        push_kv(&mut s, "train_noise", self.train_noise);
        push_kv(&mut s, "washout", self.washout);
        s
    }
}
