use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("refusing to write dataset into non-empty directory {}", .0.display())]
    NotEmpty(PathBuf),
    #[error("duplicate project id {0:?}")]
    DuplicateProject(String),
    #[error("invalid project: {0}")]
    InvalidProject(String),
    #[error("{}: format error: {message}", file.display())]
    Format { file: PathBuf, message: String },
    #[error("unsupported dataset format_version {0} (this build reads version 1)")]
    UnsupportedVersion(u64),
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("network error{}: {message}", status.map(|s| format!(" (HTTP {s})")).unwrap_or_default())]
    Network {
        status: Option<u16>,
        message: String,
    },
    #[error("GitHub API rate limit exhausted; resets at {reset} ({})", crate::ingest::format_epoch(*reset))]
    RateLimited { reset: i64 },
    #[error("malformed API response: {0}")]
    Format(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("git: {0}")]
    Git(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}
