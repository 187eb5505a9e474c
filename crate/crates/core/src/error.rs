use crate::interferometer::StateError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid `{key}`: {message}")]
    Config { key: String, message: String },
    #[error(transparent)]
    State(#[from] StateError),
    #[error("cannot merge summaries of different scenarios")]
    ModelMismatch,
    #[error("cannot merge summaries drawn with different seeds ({0} and {1})")]
    SeedMismatch(u64, u64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config { .. } | Error::State(_) | Error::ModelMismatch | Error::SeedMismatch(..)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
