//! Mining schema, immutable on-disk datasets, snapshots and validation.

pub mod model;
mod snapshot;
mod store;
mod validate;

pub use model::*;
pub use snapshot::{compute_snapshot, snapshot_refs};
pub use store::{read_dataset, write_dataset, Dataset, ASTS_FILE, MANIFEST_FILE, PROJECTS_FILE};
pub use validate::{validate_dataset, Check, Issue, ValidationReport};
