//! Crate-wide error plumbing.
//!
//! Each module defines its own focused error enum; [`Error`] folds them into
//! one type so callers (notably the CLI) can match on a single enum and map
//! every failure onto a stable [`ErrorCategory`].

use thiserror::Error;

use crate::classifier::ClassifierError;
use crate::csp::CspError;
use crate::dsp::DspError;
use crate::eval::EvalError;
use crate::session::{FesError, SessionError};
use crate::signal_model::DataError;
use crate::spectral::SpectralError;
use crate::synthgen::GenError;

/// Coarse failure category; the CLI maps these onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Malformed, inconsistent, or insufficient input data.
    Data,
    /// Numerically degenerate problem (rank deficiency, singular solve, ...).
    Numerical,
    /// Operating-system I/O failure.
    Io,
}

impl ErrorCategory {
    /// Stable machine-parsable name, printed as the first token of CLI errors.
    pub fn name(self) -> &'static str {
        match self {
            ErrorCategory::Data => "DataError",
            ErrorCategory::Numerical => "NumericalError",
            ErrorCategory::Io => "IoError",
        }
    }
}

/// Union of every module error.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Csp(#[from] CspError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Fes(#[from] FesError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("I/O failure: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Data(e) => e.category(),
            Error::Dsp(e) => e.category(),
            Error::Csp(e) => e.category(),
            Error::Classifier(e) => e.category(),
            Error::Spectral(e) => e.category(),
            Error::Gen(e) => e.category(),
            Error::Session(e) => e.category(),
            Error::Fes(e) => e.category(),
            Error::Eval(e) => e.category(),
            Error::Io(_) => ErrorCategory::Io,
        }
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
