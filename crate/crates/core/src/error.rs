use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix has zero spectral radius, cannot rescale")]
    ZeroSpectralRadius,

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("singular system: normal equations are not invertible (reg = {reg})")]
    SingularSystem { reg: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("series too short: length {len}, need at least {needed}")]
    SeriesTooShort { len: usize, needed: usize },

    #[error("index {index} out of range for size {bound}")]
    IndexOutOfRange { index: usize, bound: usize },

    #[error("invalid aperture {0}, must be > 0")]
    InvalidAperture(f64),

    #[error("interpolation parameter {0} outside [0, 1]")]
    LambdaOutOfRange(f64),

    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("{path}: parse error at row {row}, column {col}: {reason}")]
    Parse {
        path: String,
        row: usize,
        col: usize,
        reason: String,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("target channel {0} has zero variance, NRMSE undefined")]
    ZeroVarianceTarget(usize),

    #[error("expected a single-channel series, got {0} channels")]
    NotSingleChannel(usize),

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),
}

pub(crate) fn invalid_param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParam {
        name,
        reason: reason.into(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
