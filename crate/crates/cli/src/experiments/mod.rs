//! Experiment drivers. Each submodule exposes `execute` (pure compute,
//! reused by the test suite) and `run` (execute plus file emission into
//! the output directory).

pub mod degrade;
pub mod distort;
pub mod interpolate;

use std::fs;
use std::path::Path;

use crate::error::{io_err, CliResult};

pub(crate) fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}
