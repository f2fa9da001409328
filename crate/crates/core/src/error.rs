use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input that violates a documented precondition.
    #[error("invalid input: {0}")]
    Validation(String),

    /// Two sequences that must be index-aligned are not.
    #[error("alignment error: {what} has length {actual}, expected {expected}")]
    Alignment {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    /// Pearson correlation is undefined for a constant input vector.
    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(&'static str),

    #[error(
        "bias bound violated: |{bias}| > {bound} (T={horizon}, M={segment_len}, lambda={lambda})"
    )]
    BoundViolation {
        bias: f64,
        bound: f64,
        horizon: usize,
        segment_len: usize,
        lambda: f64,
    },

    #[error("training diverged at update {update}: {detail}")]
    Diverged { update: usize, detail: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}:{line}: {source}")]
    Parse {
        path: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
