//! From the outside world to datasets: GitHub metadata, cloning, history
//! extraction, source parsing and dataset assembly.

mod build;
mod clone;
mod git;
pub mod github;
mod history;
pub mod java;

pub use build::{build_dataset, BuildReport};
pub use clone::{
    clone_repositories, dir_name_for, full_name_for_dir, parse_repo_line, targets_from_list,
    targets_from_metadata_dir, CloneReport, CloneTarget,
};
pub use github::{
    fetch_repo_metadata, list_repositories, write_metadata_files, FetchReport, GithubClient,
    RepoMetadata, SearchCriteria,
};
pub use history::{
    extract_history, extract_history_with_blobs, file_kind_for, sha256_hex, ExtractedHistory,
};
pub use java::{parse_source, ParseFailure};

/// Renders epoch seconds as an RFC 3339 UTC string.
pub fn format_epoch(secs: i64) -> String {
    chrono::DateTime::from_timestamp(secs, 0)
        .map(|t| t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true))
        .unwrap_or_else(|| secs.to_string())
}
