use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("unphysical covariance matrix: {0}")]
    Unphysical(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("missing run: {0}")]
    MissingRun(String),

    #[error("rank-deficient normal equations; degenerate directions: {}", directions.join(", "))]
    RankDeficient { directions: Vec<String> },

    #[error("fit did not converge: {0}")]
    NotConverged(String),

    #[error("config error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config {
        line: Option<usize>,
        message: String,
    },

    #[error("malformed record file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Process exit code for the command-line tool: 2 for configuration
    /// problems, 3 for data problems, 4 for fits that did not converge.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter { .. } | Error::Config { .. } => 2,
            Error::RankDeficient { .. } | Error::NotConverged(_) => 4,
            Error::Unphysical(_)
            | Error::InvalidInput(_)
            | Error::InsufficientSamples { .. }
            | Error::MissingRun(_)
            | Error::Format(_)
            | Error::Io(_)
            | Error::Json(_) => 3,
        }
    }
}
