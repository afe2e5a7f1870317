use std::path::PathBuf;

use crate::matrix::DenseMatrix;

pub type Result<T> = std::result::Result<T, NmfError>;

#[derive(Debug, thiserror::Error)]
pub enum NmfError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Ranks disagreed about the shape of a collective call.
    #[error("protocol error: {0}")]
    Protocol(String),

    /// Block principal pivoting hit its exchange cap on some columns.
    /// `best` holds the lowest-violation iterate seen for every column.
    #[error("no convergence after {iterations} exchanges in columns {columns:?}")]
    NoConvergence {
        iterations: usize,
        columns: Vec<usize>,
        best: Box<DenseMatrix>,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Another rank failed and the collective was torn down.
    #[error("collective aborted by a failing peer rank")]
    Aborted,

    #[error("iteration {iteration}{}: {source}", rank.map(|r| format!(" on rank {r}")).unwrap_or_default())]
    AtIteration {
        iteration: usize,
        rank: Option<usize>,
        #[source]
        source: Box<NmfError>,
    },
}

impl NmfError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        NmfError::InvalidArgument(msg.into())
    }

    pub(crate) fn protocol(msg: impl Into<String>) -> Self {
        NmfError::Protocol(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        NmfError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_iteration(self, iteration: usize, rank: Option<usize>) -> Self {
        NmfError::AtIteration {
            iteration,
            rank,
            source: Box::new(self),
        }
    }

    /// Strips iteration/rank context.
    pub fn root(&self) -> &NmfError {
        match self {
            NmfError::AtIteration { source, .. } => source.root(),
            other => other,
        }
    }
}
