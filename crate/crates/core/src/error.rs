use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix contains a non-finite entry")]
    NonFinite,
    #[error("invalid Schatten exponent {0} (need p >= 1 or p = inf)")]
    InvalidExponent(f64),
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("invalid shape: {0}")]
    ShapeInvalid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("point lies outside the symbol's domain box")]
    OutOfDomain,
    #[error("gradient vanishes (norm {0:e}); not a submersion point")]
    DegenerateGradient(f64),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("boundary point is not transverse")]
    NonTransverse,
    #[error("sample {0} is not transverse")]
    NonTransverseSample(usize),
    #[error("symbol has no second derivatives")]
    RequiresC2,
    #[error("negative weight at index {0}")]
    NegativeWeight(usize),
    #[error("direction vector is zero")]
    ZeroDirection,
    #[error("vector is zero")]
    ZeroVector,
    #[error("group mismatch: {0} vs {1}")]
    GroupMismatch(String, String),
    #[error("fractional-linear chart hits a pole")]
    ChartOverflow,
    #[error("candidate basis is linearly dependent")]
    DegenerateBasis,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("expression parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("invalid symbol: {0}")]
    InvalidSymbol(String),
}

pub type Result<T> = std::result::Result<T, Error>;
