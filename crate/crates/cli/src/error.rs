use thiserror::Error;

/// Failure classes, each mapped to its own process exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("runtime failure: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<nanosyn::Error> for CliError {
    fn from(e: nanosyn::Error) -> Self {
        use nanosyn::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidConfig(_) | E::InvalidDevice(_) | E::DispersionTooLarge { .. } => {
                CliError::Config(msg)
            }
            E::Io(_)
            | E::BadMagic { .. }
            | E::BadHeader { .. }
            | E::Truncated { .. }
            | E::UnsupportedVersion { .. }
            | E::ValueOutOfRange { .. }
            | E::NotBinary
            | E::DimensionMismatch { .. }
            | E::OutOfRange { .. } => CliError::Data(msg),
            E::SingularSystem | E::EmptyTrace => CliError::Runtime(msg),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
