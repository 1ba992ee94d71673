use std::fmt;
use std::path::{Path, PathBuf};

use iaoqsim::ErrorCategory;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    /// Configuration violations, all of them.
    Config(Vec<String>),
    Core(iaoqsim::Error),
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(vec![msg.into()])
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io { .. } => EXIT_IO,
            CliError::Core(e) => match e.category() {
                ErrorCategory::Input => EXIT_CONFIG,
                ErrorCategory::Numerical => EXIT_NUMERICAL,
                ErrorCategory::Io => EXIT_IO,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msgs) => {
                write!(f, "invalid configuration ({} problem{})", msgs.len(), if msgs.len() == 1 { "" } else { "s" })?;
                for m in msgs {
                    write!(f, "\n  {m}")?;
                }
                Ok(())
            }
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io { path, source } => write!(f, "I/O error on {}: {source}", path.display()),
        }
    }
}

impl std::error::Error for CliError {}

impl From<iaoqsim::Error> for CliError {
    fn from(e: iaoqsim::Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;
