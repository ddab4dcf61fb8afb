use thiserror::Error;

use crate::spectral::Side;

#[derive(Debug, Error)]
pub enum ScatterError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field is on the {found:?} side, operation expects {expected:?}")]
    SideMismatch { expected: Side, found: Side },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("sample count {found} does not match grid size {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid analysis parameters: {0}")]
    InvalidParams(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty time series")]
    EmptySeries,

    #[error("time series is not strictly increasing at index {0}")]
    NonMonotoneTimes(usize),

    #[error("rate fit needs at least {needed} samples, got {found}")]
    TooFewSamples { needed: usize, found: usize },

    #[error("rate fit needs strictly positive values (sample {index} is {value})")]
    NonPositiveValue { index: usize, value: f64 },

    #[error("time window [{t_lo}, {t_hi}] spans less than {decades} decade(s)")]
    WindowTooShort { t_lo: f64, t_hi: f64, decades: f64 },

    #[error("{0}")]
    OutOfRange(String),

    #[error("grid too large for brute-force evaluation: N = {n}, limit {limit}")]
    CostGuard { n: usize, limit: usize },

    #[error("domain too small: L = {length} but t_end = {t_end} needs L >= {required}")]
    DomainTooSmall {
        length: f64,
        t_end: f64,
        required: f64,
    },

    #[error("mass reached the domain boundary at t = {t}: edge amplitude {edge:e} > {limit:e}")]
    WrapAround { t: f64, edge: f64, limit: f64 },

    #[error("relative mass drift {drift:e} at t = {t} exceeds {limit:e}")]
    MassDrift { t: f64, drift: f64, limit: f64 },

    #[error("snapshot file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ScatterError>;
