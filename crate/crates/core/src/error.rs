use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("negative saliency value {value} at index {index}")]
    NegativeSaliency { index: usize, value: f64 },

    /// The requested reduction cannot be reached; `achievable` is the best the
    /// model can deliver for this frame.
    #[error("target reduction {target} exceeds achievable maximum {achievable}")]
    Infeasible { target: f64, achievable: f64 },

    #[error("frame {frame}: target reduction {target:.4} exceeds achievable maximum {achievable:.4}")]
    InfeasibleFrame { frame: usize, target: f64, achievable: f64 },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },

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

    pub(crate) fn format(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Format {
            what,
            detail: detail.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Infeasible { .. } | Error::InfeasibleFrame { .. } => 3,
            Error::Degenerate(_) => 4,
            Error::Validation(_)
            | Error::NegativeSaliency { .. }
            | Error::Format { .. }
            | Error::Json(_)
            | Error::Csv(_)
            | Error::Io(_) => 2,
        }
    }
}
