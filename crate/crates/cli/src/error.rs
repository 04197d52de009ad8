use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] ambigil_core::Error),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for validation problems, 3 when a resource cap stops the run, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use ambigil_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(E::InvalidArgument(_) | E::Format(_)) => 2,
            CliError::Core(E::ResourceCap { .. }) => 3,
            CliError::Core(E::Io(_)) | CliError::Io { .. } => 1,
        }
    }
}

pub(crate) fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}
