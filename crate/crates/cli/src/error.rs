use std::fmt;
use std::path::Path;
use std::process::ExitCode;

/// A failed command, carrying its exit status.
#[derive(Debug)]
pub enum Failure {
    /// Bad arguments, a config that does not parse or validate, a malformed
    /// trace, or a run whose learners broke down numerically. Exit 1.
    Invalid(String),
    /// Reading or writing a file failed. Exit 2.
    Io(String),
}

impl Failure {
    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        Failure::Io(format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            Failure::Invalid(_) => ExitCode::from(1),
            Failure::Io(_) => ExitCode::from(2),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Invalid(msg) => write!(f, "error: {msg}"),
            Failure::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

impl From<csv::Error> for Failure {
    fn from(err: csv::Error) -> Self {
        Failure::Io(err.to_string())
    }
}
