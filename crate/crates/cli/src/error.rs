use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed input {path}: {message}")]
    Input { path: String, message: String },
    #[error(transparent)]
    Core(#[from] tensornet::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn input(path: &Path, message: impl Into<String>) -> Self {
        Self::Input {
            path: path.display().to_string(),
            message: message.into(),
        }
    }

    /// 2 for configuration errors, 3 for I/O and malformed files, 4 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        use tensornet::Error as E;
        match self {
            Self::Config(_) => 2,
            Self::Io { .. } | Self::Input { .. } => 3,
            Self::Core(e) => match e {
                E::Dimension(_) | E::Argument(_) | E::Rank(_) | E::Size { .. } | E::BaselineInfeasible { .. } => 2,
                E::Io(_) | E::Format(_) => 3,
                E::Solver { .. } | E::Training { .. } => 4,
            },
        }
    }
}
