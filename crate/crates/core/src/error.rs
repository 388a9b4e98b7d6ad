use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the simulator and analytics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("SVD did not converge after {sweeps} sweeps (relative residual {residual:e})")]
    Convergence { sweeps: usize, residual: f64 },

    #[error("singular channel: subchannel gain {sigma:e} at index {index} is below the floor")]
    SingularChannel { index: usize, sigma: f64 },

    #[error("degenerate fit: all x values are equal")]
    DegenerateFit,

    #[error("unreachable performance target {target}: zero distortion only reaches {ceiling}")]
    UnreachableTarget { target: f64, ceiling: f64 },

    #[error("{}:{line}: {message}", path.display())]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("trial {trial} at snr index {snr_index}: {source}")]
    Trial {
        trial: u64,
        snr_index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit status for this error: 2 for unreadable or malformed
    /// input, 3 for inputs that are well-formed but outside the model.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Format { .. } | Error::Io(_) | Error::Csv(_) => 2,
            _ => 3,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}
