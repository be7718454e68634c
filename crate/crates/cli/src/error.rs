use thiserror::Error;

/// Failures mapped onto the process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments, unreadable or malformed config, IO problems.
    #[error("{0}")]
    Usage(String),
    /// A validator or certificate said no.
    #[error("{0}")]
    Validation(String),
    /// The divergence guard fired.
    #[error("{0}")]
    Divergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Divergence(_) => 3,
        }
    }
}

impl From<mannlab_core::Error> for CliError {
    fn from(e: mannlab_core::Error) -> Self {
        use mannlab_core::Error as E;
        match e {
            E::Divergence { .. } => CliError::Divergence(e.to_string()),
            E::Inadmissible { .. }
            | E::ScheduleOutOfRange { .. }
            | E::AnchorNonConvergence { .. }
            | E::CauchyCheck(_)
            | E::EmptyFixedSet => CliError::Validation(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("io: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Usage(format!("json: {e}"))
    }
}
