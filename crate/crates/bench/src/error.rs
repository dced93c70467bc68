use thiserror::Error;

/// Harness failures, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Core(#[from] covspec::Error),

    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },

    #[error("config file: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub fn config(field: &str, message: impl Into<String>) -> Self {
        Self::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Self::Io {
            context: context.into(),
            source,
        }
    }

    /// 2 parse/input, 3 regime, 4 numerical, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        use covspec::Error as E;
        match self {
            Self::Config { .. } | Self::Json(_) => 2,
            Self::Core(E::Parse(_) | E::Input(_) | E::Config(_)) => 2,
            Self::Core(E::Regime { .. }) => 3,
            Self::Core(E::Numerical { .. } | E::Degenerate(_) | E::Domain { .. }) => 4,
            Self::Core(E::Io(_)) | Self::Io { .. } => 1,
        }
    }
}

pub type HarnessResult<T> = std::result::Result<T, HarnessError>;
