use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("solver: {0}")]
    Solver(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io { .. } => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

/// Input-shaped failures are config errors; everything raised while solving
/// is a solver failure.
impl From<mather_lp::Error> for CliError {
    fn from(e: mather_lp::Error) -> Self {
        use mather_lp::Error as E;
        match e {
            E::InvalidArgument(_) | E::DimensionMismatch { .. } | E::RotationOutOfRange(_) => {
                CliError::Config(e.to_string())
            }
            E::Solver(_) | E::TruncationExceeded { .. } | E::TooLarge { .. } => CliError::Solver(e.to_string()),
        }
    }
}
