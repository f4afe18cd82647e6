//! Error type shared across the crate.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A distribution or configuration parameter is outside its domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A function argument is outside the support of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Sampler state that should be impossible under the model invariants.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// The slice-sampling bracket collapsed without finding an acceptable point.
    #[error("degenerate density: slice bracket shrank to width {width:e} around x = {x} without acceptance")]
    DegenerateDensity { x: f64, width: f64 },

    /// Input data violates a documented contract.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An update inside the Gibbs sweep failed; carries the sweep index.
    #[error("chain aborted at iteration {iteration}: {source}")]
    ChainAborted {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    /// Posterior summarization was asked for an empty trace.
    #[error("empty chain trace")]
    EmptyTrace,

    /// Filesystem failure, tagged with the offending path.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A file does not conform to its documented format.
    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

impl Error {
    /// True for errors caused by bad user input rather than runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_) | Error::Domain(_) | Error::InvalidInput(_) | Error::Parse { .. }
        )
    }
}
