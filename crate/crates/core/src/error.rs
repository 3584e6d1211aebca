use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("unsupported dimension n={n}: {hint}")]
    UnsupportedDimension { n: usize, hint: &'static str },

    #[error("non-finite integrand value {value} at node {index}")]
    Integrand { index: usize, value: f64 },

    #[error("insufficient accuracy: {0}")]
    Accuracy(String),

    #[error("degenerate shape: {0}")]
    DegenerateShape(String),

    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),

    #[error("solver failed: {0}")]
    Solver(String),

    #[error("volume mismatch: relative error {relative:.3e} exceeds {tolerance:.1e}")]
    VolumeMismatch { relative: f64, tolerance: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("candidate pool exhausted: selected {selected} of {requested} balls from {pool} candidates")]
    PoolExhausted {
        selected: usize,
        requested: usize,
        pool: usize,
    },

    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("unknown experiment '{0}'")]
    UnknownExperiment(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
