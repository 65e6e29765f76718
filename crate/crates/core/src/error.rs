use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid algebra: {0}")]
    InvalidAlgebra(String),

    #[error("metric is singular or not positive definite")]
    SingularMetric,

    #[error("algebra `{0}` has no matrix representation")]
    NoRepresentation(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("malformed algebra file: {0}")]
    AlgebraFile(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("chart is not invariant under the Euler-Arnold drift at {point:?}: tangency residual {residual:.3e} exceeds {tolerance:.1e}")]
    ChartNotInvariant {
        point: Vec<f64>,
        residual: f64,
        tolerance: f64,
    },

    #[error("curve is not centered: mean {0:?}")]
    NotCentered(Vec<f64>),

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("CFL violation: dt = {dt:.3e} exceeds the stable bound {bound:.3e}")]
    Cfl { dt: f64, bound: f64 },

    #[error("grid resolution {0} is not a power of two")]
    Resolution(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
