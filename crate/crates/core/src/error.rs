use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: left is {left_rows}x{left_cols}, right is {right_rows}x{right_cols}")]
    DimensionMismatch {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("matrix is not positive semidefinite: pivot {pivot} has residual diagonal {value:e}")]
    NotPsd { pivot: usize, value: f64 },

    #[error("triangular solve touched a dropped or zero pivot at position {0}")]
    SingularPivot(usize),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("non-finite payload in round `{round}`")]
    NonFinitePayload { round: String },

    #[error("worker {worker} panicked in round `{round}`")]
    WorkerPanic { round: String, worker: usize },

    #[error("round `{round}` failed")]
    Round {
        round: String,
        #[source]
        source: Box<Error>,
    },

    #[error("message `{label}` not delivered to worker {worker}")]
    MissingMessage { label: String, worker: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn mismatch(op: &'static str, left: (usize, usize), right: (usize, usize)) -> Self {
        Error::DimensionMismatch {
            op,
            left_rows: left.0,
            left_cols: left.1,
            right_rows: right.0,
            right_cols: right.1,
        }
    }

    /// True for failures of the numerical kernels rather than of the input data.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NotPsd { .. } | Error::SingularPivot(_) | Error::Invariant(_) => true,
            Error::Round { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
