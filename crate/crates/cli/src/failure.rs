use std::fmt;
use std::path::Path;

use exboot_core::Error;

/// Terminal outcomes other than success, one per exit code.
#[derive(Debug)]
pub enum Failure {
    /// Some verification check fell outside its tolerance, or the computation could not produce a result.
    Check(String),
    Config(String),
    Io(String),
}

impl Failure {
    pub fn io(path: &Path, e: impl fmt::Display) -> Self {
        Failure::Io(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Check(_) => 1,
            Failure::Config(_) => 2,
            Failure::Io(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Check(m) => write!(f, "check failed: {m}"),
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) | Error::SchemeSpec { .. } | Error::Validation(_) | Error::Size { .. } => {
                Failure::Config(e.to_string())
            }
            Error::Parse { .. } => Failure::Io(e.to_string()),
            _ => Failure::Check(e.to_string()),
        }
    }
}
