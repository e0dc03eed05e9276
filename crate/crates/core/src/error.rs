use thiserror::Error;

/// Errors raised by the decompounding toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size {0} must be a power of two and at least 4")]
    InvalidGrid(usize),

    #[error("grid mismatch: {left} points vs {right} points")]
    GridMismatch { left: usize, right: usize },

    #[error("length mismatch: expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("frequency {k} outside the representable range |k| <= {max}")]
    FrequencyOutOfRange { k: i64, max: i64 },

    #[error("wavelet level {levels} too deep for a grid of {n_points} points")]
    LevelTooDeep { levels: usize, n_points: usize },

    #[error("unsupported wavelet family: {0}")]
    UnsupportedWavelet(String),

    #[error("Lévy density must be strictly positive (minimum {min} at x = {at})")]
    NonPositiveDensity { min: f64, at: f64 },

    #[error("density {min} at x = {at} is below the floor {floor}")]
    BelowFloor { min: f64, at: f64, floor: f64 },

    #[error("increment density is not strictly positive on the grid (minimum {0})")]
    NonPositiveIncrementDensity(f64),

    #[error("convolution series did not reach tolerance {tol} within {max_terms} terms")]
    SeriesTruncation { tol: f64, max_terms: usize },

    #[error("non-finite log-likelihood; the grid is too coarse for this density")]
    NonFiniteLikelihood,

    #[error("function is not centred under the increment law (integral {0:e})")]
    NotCentered(f64),

    #[error("multilinear score of order {0} is not supported (orders 1 to 3 only)")]
    UnsupportedOrder(usize),

    #[error("empty chain")]
    EmptyChain,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("MCMC aborted at sweep {sweep}: {reason}")]
    McmcAborted { sweep: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
