//! CLI failure type: a usage variant plus a wrapper around library errors,
//! mapped to stable exit codes and single-line, category-prefixed messages.

use std::fmt;

use miep_core::{Error, ErrorCategory};

/// Anything a subcommand can fail with.
#[derive(Debug)]
pub enum CliError {
    /// Semantically invalid flags or flag combinations (exit 2, like
    /// argument-parsing failures).
    Usage(String),
    /// A library failure; the exit code follows its category.
    Core(Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) => match e.category() {
                ErrorCategory::Data => 3,
                ErrorCategory::Numerical => 4,
                ErrorCategory::Io => 5,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "Usage: {}", one_line(m)),
            CliError::Core(e) => {
                write!(f, "{}: {}", e.category().name(), one_line(&e.to_string()))
            }
        }
    }
}

/// Error messages must stay machine-parsable as exactly one stderr line.
fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

macro_rules! impl_from_core {
    ($($ty:ty),* $(,)?) => {$(
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::Core(Error::from(e))
            }
        }
    )*};
}

impl_from_core!(
    miep_core::signal_model::DataError,
    miep_core::dsp::DspError,
    miep_core::csp::CspError,
    miep_core::classifier::ClassifierError,
    miep_core::spectral::SpectralError,
    miep_core::synthgen::GenError,
    miep_core::session::SessionError,
    miep_core::session::FesError,
    miep_core::eval::EvalError,
    std::io::Error,
);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_categories() {
        assert_eq!(CliError::usage("x").exit_code(), 2);
        let data: CliError =
            miep_core::signal_model::DataError::MalformedHeader("bad".into()).into();
        assert_eq!(data.exit_code(), 3);
        let num: CliError =
            miep_core::classifier::ClassifierError::SingularCovariance("det 0".into()).into();
        assert_eq!(num.exit_code(), 4);
        let io: CliError = std::io::Error::new(std::io::ErrorKind::NotFound, "gone").into();
        assert_eq!(io.exit_code(), 5);
    }

    #[test]
    fn messages_are_single_category_prefixed_lines() {
        let e: CliError =
            miep_core::signal_model::DataError::MalformedHeader("line one\nline two".into())
                .into();
        let msg = e.to_string();
        assert!(msg.starts_with("DataError: "), "{msg}");
        assert!(!msg.contains('\n'));
        assert_eq!(CliError::usage("bad --band").to_string(), "Usage: bad --band");
    }
}
