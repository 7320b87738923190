use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use serde_json::Value;

use super::clone::{full_name_for_dir, is_git_dir};
use super::github::RepoMetadata;
use super::history::extract_history_with_blobs;
use super::java::parse_source;
use crate::dataset::{write_dataset, AstRoot, DatasetManifest, FileKind, Project};
use crate::error::IngestError;
use crate::pool::run_indexed;

#[derive(Debug, Clone, Default)]
pub struct BuildReport {
    pub manifest: Option<DatasetManifest>,
    pub projects: usize,
    pub revisions: usize,
    pub distinct_asts: usize,
    /// Distinct SOURCE_JAVA blobs that failed to parse.
    pub parse_failures: usize,
    /// Number of parser invocations; equals the number of distinct Java blobs.
    pub parse_invocations: usize,
    pub skipped: Vec<(String, String)>,
    pub warnings: Vec<String>,
}

impl BuildReport {
    pub fn summary(&self) -> String {
        format!(
            "projects={} revisions={} distinct_asts={} parse_failures={}",
            self.projects, self.revisions, self.distinct_asts, self.parse_failures
        )
    }
}

/// Metadata fields mapped onto `Project` itself rather than its metadata map.
const MAPPED_FIELDS: &[&str] = &["full_name", "html_url", "stargazers_count", "created_at"];

fn clone_dirs(root: &Path) -> Result<Vec<PathBuf>, IngestError> {
    let entries = fs::read_dir(root).map_err(|source| IngestError::Io {
        path: root.to_path_buf(),
        source,
    })?;
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| !n.starts_with('.'))
        })
        .collect();
    dirs.sort();
    Ok(dirs)
}

fn load_metadata(dir: &Path, dir_name: &str) -> Result<Option<RepoMetadata>, String> {
    let path = dir.join(format!("{dir_name}.json"));
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    RepoMetadata::from_json(&v)
        .map(Some)
        .map_err(|e| format!("{}: {e}", path.display()))
}

fn scalar_text(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

/// Builds a dataset from every clone under `clones_root`. Repositories are
/// processed by up to `jobs` workers; each distinct Java blob is parsed
/// exactly once. The written dataset does not depend on `jobs`.
pub fn build_dataset(
    clones_root: &Path,
    metadata_dir: Option<&Path>,
    out_dir: &Path,
    name: &str,
    jobs: usize,
) -> Result<BuildReport, IngestError> {
    let dirs = clone_dirs(clones_root)?;
    let total = dirs.len();
    let done = AtomicUsize::new(0);

    let extracted = run_indexed(total, jobs, |i| {
        let dir = &dirs[i];
        let result = if is_git_dir(dir) {
            extract_history_with_blobs(dir)
        } else {
            Err(IngestError::Input(format!(
                "{} is not a git repository",
                dir.display()
            )))
        };
        let n = done.fetch_add(1, Ordering::Relaxed) + 1;
        if n.is_multiple_of(10) || n == total {
            log::info!("extracted {n}/{total} repositories");
        }
        result
    });

    let mut report = BuildReport::default();
    let mut blobs: BTreeMap<String, Vec<u8>> = BTreeMap::new();
    let mut projects = Vec::new();
    for (dir, result) in dirs.iter().zip(extracted) {
        let dir_name = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let history = match result {
            Ok(h) => h,
            Err(e) => {
                report.skipped.push((dir_name, e.to_string()));
                continue;
            }
        };
        let id = full_name_for_dir(&dir_name);
        let short = id.rsplit('/').next().unwrap_or(&id).to_string();
        let mut project = Project {
            id: id.clone(),
            name: short,
            url: history.repository.url.clone(),
            stars: 0,
            created: 0,
            metadata: BTreeMap::new(),
            repository: history.repository,
        };
        if let Some(mdir) = metadata_dir {
            match load_metadata(mdir, &dir_name) {
                Ok(Some(meta)) => {
                    project.stars = meta.stargazers_count;
                    project.created = meta.created_at;
                    project.url = meta.html_url.clone();
                    if let Value::Object(map) = &meta.raw {
                        for (k, v) in map {
                            if MAPPED_FIELDS.contains(&k.as_str()) {
                                continue;
                            }
                            if let Some(text) = scalar_text(v) {
                                project.metadata.insert(k.clone(), text);
                            }
                        }
                    }
                }
                Ok(None) => {}
                Err(e) => report
                    .warnings
                    .push(format!("ignoring metadata for {id}: {e}")),
            }
        }
        blobs.extend(history.java_blobs);
        projects.push(project);
    }

    let pending: Vec<(String, Vec<u8>)> = blobs.into_iter().collect();
    let parsed = run_indexed(pending.len(), jobs, |i| {
        parse_source(&pending[i].1, FileKind::SourceJava)
    });
    report.parse_invocations = pending.len();

    let mut asts: BTreeMap<String, AstRoot> = BTreeMap::new();
    let mut failed: BTreeSet<String> = BTreeSet::new();
    for ((hash, _), result) in pending.into_iter().zip(parsed) {
        match result {
            Ok(ast) => {
                asts.insert(hash, ast);
            }
            Err(e) => {
                log::debug!("parse failure in blob {hash}: {e}");
                failed.insert(hash);
            }
        }
    }

    for project in &mut projects {
        for rev in &mut project.repository.revisions {
            for f in &mut rev.files {
                if f.file_kind == FileKind::SourceJava && failed.contains(&f.blob_hash) {
                    f.parse_error = true;
                }
            }
        }
    }

    report.projects = projects.len();
    report.revisions = projects.iter().map(|p| p.repository.revisions.len()).sum();
    report.distinct_asts = asts.len();
    report.parse_failures = failed.len();
    report.manifest = Some(write_dataset(&projects, &asts, out_dir, name)?);
    Ok(report)
}
