use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("sample too small: n = {n}, at least {min} required")]
    SampleTooSmall { n: usize, min: usize },

    #[error("failed to load model: {0}")]
    ModelLoad(#[from] LoadError),

    #[error("training diverged at epoch {epoch}, batch {batch}: loss = {loss}")]
    Diverged {
        epoch: usize,
        batch: usize,
        loss: f64,
    },

    #[error("Hessian is not positive definite; no likelihood interval available")]
    NotPositiveDefinite,

    #[error("optimizer did not converge: {0}")]
    NotConverged(String),

    #[error("width ratio undefined: likelihood interval has zero width")]
    UndefinedRatio,

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Diverged { .. } | Error::NotPositiveDefinite | Error::NotConverged(_)
        )
    }
}

/// Reasons a serialized model can be rejected.
#[derive(Debug, Error, PartialEq)]
pub enum LoadError {
    #[error("unsupported model version {found:?} (expected {expected:?})")]
    Version { found: String, expected: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("corrupt model payload: {0}")]
    Corrupt(String),
}
