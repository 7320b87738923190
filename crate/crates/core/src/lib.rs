//! Build immutable mining datasets from Git repositories and run
//! visitor-style aggregation queries over them in parallel.

pub mod dataset;
pub mod engine;
pub mod error;
pub mod export;
pub mod ingest;
pub mod pool;
pub mod query;

pub use error::{DatasetError, IngestError};
