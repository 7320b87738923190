//! On-disk dataset layout.
//!
//! ```text
//! <dataset>/manifest.json   one JSON object
//! <dataset>/projects.jsonl  one Project per line, sorted by id
//! <dataset>/asts.jsonl      one {"blob_hash", "ast"} record per line, sorted by hash
//! ```

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::model::{AstRoot, DatasetManifest, Project, FORMAT_VERSION};
use crate::error::DatasetError;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const PROJECTS_FILE: &str = "projects.jsonl";
pub const ASTS_FILE: &str = "asts.jsonl";

#[derive(Serialize)]
struct AstRecordRef<'a> {
    blob_hash: &'a str,
    ast: &'a AstRoot,
}

#[derive(Deserialize)]
pub(crate) struct AstRecord {
    pub blob_hash: String,
    pub ast: AstRoot,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes an immutable dataset into `dir`, which must be empty or absent.
///
/// The manifest's `created` stamp is the newest commit time in the corpus
/// (0 when there is none) so that output bytes depend only on the input.
pub fn write_dataset(
    projects: &[Project],
    ast_store: &BTreeMap<String, AstRoot>,
    dir: &Path,
    name: &str,
) -> Result<DatasetManifest, DatasetError> {
    if dir.exists() {
        let mut entries = fs::read_dir(dir).map_err(io_err(dir))?;
        if entries.next().is_some() {
            return Err(DatasetError::NotEmpty(dir.to_path_buf()));
        }
    } else {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }

    let mut sorted: Vec<&Project> = projects.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    for pair in sorted.windows(2) {
        if pair[0].id == pair[1].id {
            return Err(DatasetError::DuplicateProject(pair[0].id.clone()));
        }
    }
    if let Some(p) = sorted.iter().find(|p| p.id.is_empty()) {
        return Err(DatasetError::InvalidProject(format!(
            "project with name {:?} has an empty id",
            p.name
        )));
    }

    let created = sorted
        .iter()
        .flat_map(|p| p.repository.revisions.iter().map(|r| r.commit_time))
        .max()
        .unwrap_or(0);

    let projects_path = dir.join(PROJECTS_FILE);
    write_lines(&projects_path, sorted.iter().copied())?;

    let asts_path = dir.join(ASTS_FILE);
    write_lines(
        &asts_path,
        ast_store.iter().map(|(hash, ast)| AstRecordRef {
            blob_hash: hash,
            ast,
        }),
    )?;

    let manifest = DatasetManifest {
        format_version: FORMAT_VERSION,
        name: name.to_string(),
        created,
        project_count: sorted.len(),
        ast_count: ast_store.len(),
    };
    let manifest_path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string(&manifest).expect("manifest serializes");
    text.push('\n');
    fs::write(&manifest_path, text).map_err(io_err(&manifest_path))?;
    Ok(manifest)
}

fn write_lines<T: Serialize>(
    path: &Path,
    records: impl Iterator<Item = T>,
) -> Result<(), DatasetError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    for record in records {
        serde_json::to_writer(&mut out, &record).map_err(|e| DatasetError::Io {
            path: path.to_path_buf(),
            source: e.into(),
        })?;
        out.write_all(b"\n").map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

/// Read-only, fully loaded dataset. Shareable across worker threads.
#[derive(Debug)]
pub struct Dataset {
    dir: PathBuf,
    manifest: DatasetManifest,
    projects: Vec<Project>,
    index: HashMap<String, usize>,
    asts: HashMap<String, AstRoot>,
}

impl Dataset {
    /// Builds an in-memory dataset without touching the filesystem.
    pub fn from_parts(name: &str, projects: Vec<Project>, asts: BTreeMap<String, AstRoot>) -> Self {
        let mut projects = projects;
        projects.sort_by(|a, b| a.id.cmp(&b.id));
        let created = projects
            .iter()
            .flat_map(|p| p.repository.revisions.iter().map(|r| r.commit_time))
            .max()
            .unwrap_or(0);
        let manifest = DatasetManifest {
            format_version: FORMAT_VERSION,
            name: name.to_string(),
            created,
            project_count: projects.len(),
            ast_count: asts.len(),
        };
        let index = projects
            .iter()
            .enumerate()
            .map(|(i, p)| (p.id.clone(), i))
            .collect();
        Dataset {
            dir: PathBuf::new(),
            manifest,
            projects,
            index,
            asts: asts.into_iter().collect(),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn manifest(&self) -> &DatasetManifest {
        &self.manifest
    }

    pub fn projects(&self) -> &[Project] {
        &self.projects
    }

    pub fn len(&self) -> usize {
        self.projects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projects.is_empty()
    }

    pub fn project(&self, idx: usize) -> Option<&Project> {
        self.projects.get(idx)
    }

    pub fn project_by_id(&self, id: &str) -> Option<&Project> {
        self.index.get(id).map(|&i| &self.projects[i])
    }

    pub fn ast(&self, blob_hash: &str) -> Option<&AstRoot> {
        self.asts.get(blob_hash)
    }

    pub fn ast_count(&self) -> usize {
        self.asts.len()
    }
}

pub(crate) fn read_manifest(dir: &Path) -> Result<DatasetManifest, DatasetError> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            DatasetError::Format {
                file: path.clone(),
                message: "manifest not found".into(),
            }
        } else {
            DatasetError::Io {
                path: path.clone(),
                source: e,
            }
        }
    })?;
    let raw: serde_json::Value = serde_json::from_str(&text).map_err(|e| DatasetError::Format {
        file: path.clone(),
        message: e.to_string(),
    })?;
    let version = raw.get("format_version").and_then(|v| v.as_u64());
    match version {
        Some(v) if v == u64::from(FORMAT_VERSION) => {}
        Some(v) => return Err(DatasetError::UnsupportedVersion(v)),
        None => {
            return Err(DatasetError::Format {
                file: path,
                message: "missing integer format_version".into(),
            })
        }
    }
    serde_json::from_value(raw).map_err(|e| DatasetError::Format {
        file: path,
        message: e.to_string(),
    })
}

/// Iterates the non-empty lines of a JSONL file with their 1-based numbers.
pub(crate) fn jsonl_lines(path: &Path) -> Result<Vec<(usize, String)>, DatasetError> {
    let file = fs::File::open(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            DatasetError::Format {
                file: path.to_path_buf(),
                message: "file not found".into(),
            }
        } else {
            DatasetError::Io {
                path: path.to_path_buf(),
                source: e,
            }
        }
    })?;
    let mut lines = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if !line.is_empty() {
            lines.push((i + 1, line));
        }
    }
    Ok(lines)
}

pub fn read_dataset(dir: &Path) -> Result<Dataset, DatasetError> {
    let manifest = read_manifest(dir)?;

    let projects_path = dir.join(PROJECTS_FILE);
    let mut projects = Vec::with_capacity(manifest.project_count);
    for (lineno, line) in jsonl_lines(&projects_path)? {
        let p: Project = serde_json::from_str(&line).map_err(|e| DatasetError::Format {
            file: projects_path.clone(),
            message: format!("line {lineno}: {e}"),
        })?;
        projects.push(p);
    }
    if projects.len() != manifest.project_count {
        return Err(DatasetError::Format {
            file: projects_path,
            message: format!(
                "manifest declares {} projects but {} records are present",
                manifest.project_count,
                projects.len()
            ),
        });
    }
    let mut index = HashMap::with_capacity(projects.len());
    for (i, p) in projects.iter().enumerate() {
        if index.insert(p.id.clone(), i).is_some() {
            return Err(DatasetError::Format {
                file: projects_path,
                message: format!("duplicate project id {:?}", p.id),
            });
        }
    }

    let asts_path = dir.join(ASTS_FILE);
    let mut asts = HashMap::with_capacity(manifest.ast_count);
    let mut seen = HashSet::new();
    for (lineno, line) in jsonl_lines(&asts_path)? {
        let rec: AstRecord = serde_json::from_str(&line).map_err(|e| DatasetError::Format {
            file: asts_path.clone(),
            message: format!("line {lineno}: {e}"),
        })?;
        if !seen.insert(rec.blob_hash.clone()) {
            return Err(DatasetError::Format {
                file: asts_path,
                message: format!("line {lineno}: duplicate blob_hash {}", rec.blob_hash),
            });
        }
        asts.insert(rec.blob_hash, rec.ast);
    }
    if asts.len() != manifest.ast_count {
        return Err(DatasetError::Format {
            file: asts_path,
            message: format!(
                "manifest declares {} ASTs but {} records are present",
                manifest.ast_count,
                asts.len()
            ),
        });
    }

    Ok(Dataset {
        dir: dir.to_path_buf(),
        manifest,
        projects,
        index,
        asts,
    })
}
