use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] cae_core::Error),

    #[error("{0}")]
    Format(String),

    #[error("{path}: {cause}")]
    File { path: PathBuf, cause: std::io::Error },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn file(path: impl Into<PathBuf>, cause: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            cause,
        }
    }
}
