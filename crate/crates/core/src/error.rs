use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("index {index} is not in the declared index set")]
    UnknownIndex { index: u16 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("times must be nondecreasing and nonnegative")]
    UnsortedTimes,

    #[error("basis dimension {dim} exceeds the cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("quadrature did not converge after {nodes} nodes (estimated error {est_error:e})")]
    QuadratureNotConverged {
        nodes: usize,
        est_error: f64,
        value_re: f64,
        value_im: f64,
    },

    #[error("covariance is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error(
        "simulation produced non-finite entries at step {step} (sample {sample}, index {index})"
    )]
    SimulationBlowup {
        sample: usize,
        index: u16,
        step: usize,
    },

    #[error("not enough samples: {0}")]
    NotEnoughSamples(String),

    #[error("invalid dataset file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
