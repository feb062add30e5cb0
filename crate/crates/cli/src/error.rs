use intermingle_core::Error;

/// Failures mapped onto exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, config files or inputs: exit 2.
    #[error("config error: {0}")]
    Config(String),
    /// A computation could not produce its result: exit 3.
    #[error("numeric failure: {0}")]
    Numeric(String),
    /// Reading or writing files: exit 1.
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::NoValidC | Error::TauDiverged | Error::DeltaTooSmall(_) => CliError::Numeric(msg),
            Error::Io(_) | Error::Csv(_) | Error::Json(_) | Error::Image(_) => CliError::Io(msg),
            _ => CliError::Config(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
