use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("config file {path}: {source}")]
    Toml {
        path: String,
        #[source]
        source: toml::de::Error,
    },

    #[error("{path}:{line}: {reason}")]
    Parse { path: String, line: usize, reason: String },

    #[error(transparent)]
    Core(#[from] eitmem::Error),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    /// Process exit status: 2 configuration, 3 numerical failure, 4 parse error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Toml { .. } | CliError::Io { .. } => 2,
            CliError::Parse { .. } => 4,
            CliError::Core(e) if e.is_config_error() => 2,
            CliError::Core(eitmem::Error::Parse { .. }) => 4,
            CliError::Core(eitmem::Error::Io(_)) => 2,
            CliError::Core(_) | CliError::Json(_) => 3,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
