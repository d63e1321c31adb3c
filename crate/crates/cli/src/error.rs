use boussinesq_core::Error;

/// Failure classes with their process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("property failure: {0}")]
    Property(String),
    #[error("io error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Property(_) => 4,
            CliError::Io(_) => 5,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::BlowupDetected { .. }
            | Error::CflViolation { .. }
            | Error::NoConvergence { .. }
            | Error::DegenerateDiffeo { .. }
            | Error::NonFinite(_)
            | Error::SymmetryViolation { .. } => CliError::Solver(msg),
            Error::Io(_) | Error::Csv(_) => CliError::Io(msg),
            Error::Json(ref j) if j.is_io() => CliError::Io(msg),
            _ => CliError::Config(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
