use std::io;

use phasespace::Error as CoreError;

#[derive(Debug)]
pub enum CliError {
    Parse(String),
    Core(CoreError),
    Io(io::Error),
    Invariant(String),
}

impl CliError {
    /// 0 success, 1 parse, 2 non-symplectic, 3 unsupported dual, 4 aliasing,
    /// 5 invariant failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) | CliError::Io(_) => 1,
            CliError::Invariant(_) => 5,
            CliError::Core(e) => match e {
                CoreError::NotSymplectic { .. } => 2,
                CoreError::UnsupportedDual { .. } => 3,
                CoreError::Aliasing { .. } => 4,
                CoreError::InclusionNotCertified { .. } | CoreError::NotContained { .. } => 5,
                _ => 1,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "parse error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::Invariant(m) => write!(f, "invariant failure: {m}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}
