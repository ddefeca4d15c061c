use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use cake_core::CakeError;

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or arguments.
    Config(String),
    /// A stage was run before the stage producing one of its inputs.
    MissingArtifact(PathBuf),
    /// A solver diverged or could not meet its constraints.
    Solver(String),
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) => 2,
            CliError::MissingArtifact(_) => 3,
            CliError::Solver(_) => 4,
            CliError::Other(_) => 1,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::MissingArtifact(p) => {
                write!(
                    f,
                    "stage dependency error: missing {} (run the producing stage first)",
                    p.display()
                )
            }
            CliError::Solver(m) => write!(f, "solver error: {m}"),
            CliError::Other(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<CakeError> for CliError {
    fn from(e: CakeError) -> Self {
        match e {
            CakeError::Divergence { .. } | CakeError::Infeasible { .. } => {
                CliError::Solver(e.to_string())
            }
            CakeError::Dimension(_)
            | CakeError::InvalidArgument(_)
            | CakeError::InvalidWeights { .. }
            | CakeError::BlockParity(_)
            | CakeError::UnsupportedMask(_)
            | CakeError::InvalidFlow(_) => CliError::Config(e.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.to_string())
    }
}
