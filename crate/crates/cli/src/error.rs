use std::fmt;
use std::path::Path;
use std::process::ExitCode;

/// Failure classes of the command-line tool, each with a stable exit code.
#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration or arguments (exit 1).
    Config(String),
    /// Unreadable input or unwritable output (exit 2).
    Io(String),
    /// A verification check failed (exit 3).
    Verification(String),
}

impl CliError {
    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }

    pub fn field(name: &str, err: impl fmt::Display) -> Self {
        CliError::Config(format!("`{name}`: {err}"))
    }

    pub fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Io(_) => 2,
            CliError::Verification(_) => 3,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

/// Errors raised by the library while running a resolved configuration
/// stem from parameter combinations it rejects.
impl From<galign::Error> for CliError {
    fn from(e: galign::Error) -> Self {
        match e {
            galign::Error::Io(e) => CliError::Io(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}
