use thiserror::Error;

/// Errors surfaced by scenario loading, path computation and experiment runs.
///
/// `Parse` and `Validation` indicate a bad scenario (CLI exit code 1);
/// everything else is a runtime failure (exit code 2).
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid scenario: {0}")]
    Validation(String),

    #[error("no path from {src} to {dst}")]
    NoPath { src: String, dst: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True when the error is the scenario author's fault rather than a
    /// runtime failure. The CLI maps this to exit code 1.
    pub fn is_scenario_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Validation(_)
                | Error::InvalidArgument(_)
                | Error::UnknownScenario(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
