use std::path::PathBuf;

use thiserror::Error;

use crate::graph::GraphError;
use crate::weights::WeightError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors surfaced by the detection and analysis layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Graph(#[from] GraphError),

    #[error(transparent)]
    Weights(#[from] WeightError),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("could not draw a graph without isolated vertices after {attempts} attempts")]
    ResampleExhausted { attempts: usize },
}

impl Error {
    /// True when the error stems from a bad user-supplied parameter rather
    /// than from IO or a numerical failure.
    pub fn is_config(&self) -> bool {
        match self {
            Error::InvalidParameter(_) | Error::DimensionMismatch(_) => true,
            Error::Weights(e) => !matches!(e, WeightError::Overflow { .. }),
            Error::Graph(e) => e.is_config(),
            Error::Io { .. } | Error::ResampleExhausted { .. } => false,
        }
    }

    pub fn is_io(&self) -> bool {
        match self {
            Error::Io { .. } => true,
            Error::Graph(e) => e.is_io(),
            Error::Weights(e) => matches!(e, WeightError::Io { .. }),
            _ => false,
        }
    }
}
