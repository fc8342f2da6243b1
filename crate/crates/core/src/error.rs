use thiserror::Error;

/// Errors produced anywhere in the workflow.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("capacity exceeded: {what} has dimension {dim}, limit is {limit}")]
    Capacity {
        what: &'static str,
        dim: usize,
        limit: usize,
    },

    #[error("numerical consistency check failed: {0}")]
    Numerical(String),

    #[error("incomplete Bloch vector: {missing} of {total} Pauli entries missing")]
    IncompleteBloch { missing: usize, total: usize },

    #[error("sector projection destroyed the state: in-sector trace {trace:e}")]
    SectorDestroyed { trace: f64 },

    #[error("degenerate subspace: no overlap eigenvalue above cutoff {cutoff:e}")]
    DegenerateSubspace { cutoff: f64 },

    #[error("intruder state {index}: denominator {denominator:e}, numerator {numerator:e}")]
    IntruderState {
        index: usize,
        denominator: f64,
        numerator: f64,
    },

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// True for errors caused by bad input or configuration rather than by numerics.
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::Parse { .. } | Error::Validation(_) | Error::Config(_) | Error::Io(_) => true,
            Error::Stage { source, .. } => source.is_config_error(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
