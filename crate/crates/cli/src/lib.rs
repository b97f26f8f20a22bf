//! Experiment harness around `ccl-core`: validated configurations, result
//! tables with deterministic CSV emission, and the three experiment
//! drivers (interpolation, degradation, distortion).

pub mod config;
pub mod error;
pub mod experiments;
pub mod table;

pub use config::{DegradeCfg, DistortCfg, ExperimentKind, InterpolateCfg, Mode, RawConfig};
pub use error::{CliError, CliResult};
pub use table::{emit_plot_script, Cell, PlotKind, ResultTable};
