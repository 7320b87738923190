//! Linearized commit history of a repository's default branch.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::git;
use crate::dataset::{ChangeKind, ChangedFile, CodeRepository, FileKind, Revision};
use crate::error::IngestError;

/// History plus the raw bytes of every SOURCE_JAVA blob, keyed by SHA-256.
#[derive(Debug, Default)]
pub struct ExtractedHistory {
    pub repository: CodeRepository,
    pub java_blobs: BTreeMap<String, Vec<u8>>,
}

pub fn file_kind_for(path: &str) -> FileKind {
    if path.to_ascii_lowercase().ends_with(".java") {
        FileKind::SourceJava
    } else {
        FileKind::Other
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Extracts the history reachable from `HEAD`, without ASTs.
pub fn extract_history(repo_path: &Path) -> Result<CodeRepository, IngestError> {
    extract_history_with_blobs(repo_path).map(|h| h.repository)
}

struct RawCommit {
    id: String,
    first_parent: Option<String>,
    author: String,
    committer: String,
    time: i64,
    log: String,
}

struct RawChange {
    status: char,
    mode: String,
    oid: String,
    path: String,
}

pub fn extract_history_with_blobs(repo_path: &Path) -> Result<ExtractedHistory, IngestError> {
    git::run(Some(repo_path), ["rev-parse", "--git-dir"]).map_err(|e| {
        IngestError::Input(format!(
            "{} is not a git repository: {e}",
            repo_path.display()
        ))
    })?;
    let url = git::run(Some(repo_path), ["config", "--get", "remote.origin.url"])
        .map(|o| String::from_utf8_lossy(&o).trim().to_string())
        .unwrap_or_default();

    let head = match git::run(
        Some(repo_path),
        ["rev-parse", "--verify", "-q", "HEAD^{commit}"],
    ) {
        Ok(out) => String::from_utf8_lossy(&out).trim().to_string(),
        // Unborn HEAD: a freshly initialized or empty clone.
        Err(_) => {
            return Ok(ExtractedHistory {
                repository: CodeRepository {
                    url,
                    head_index: None,
                    revisions: Vec::new(),
                },
                java_blobs: BTreeMap::new(),
            })
        }
    };

    let mut commits = read_commits(repo_path)?;
    commits.sort_by(|a, b| a.time.cmp(&b.time).then_with(|| a.id.cmp(&b.id)));
    let mut changes = read_changes(repo_path, &commits)?;

    let mut wanted: Vec<String> = changes
        .values()
        .flatten()
        .filter(|c| c.status != 'D')
        .map(|c| c.oid.clone())
        .collect();
    wanted.sort();
    wanted.dedup();
    let java_oids: std::collections::HashSet<String> = changes
        .values()
        .flatten()
        .filter(|c| c.status != 'D' && file_kind_for(&c.path) == FileKind::SourceJava)
        .map(|c| c.oid.clone())
        .collect();
    let (hashes, java_blobs) = read_blobs(repo_path, &wanted, &java_oids)?;

    let mut revisions = Vec::with_capacity(commits.len());
    let mut head_index = None;
    for (idx, c) in commits.into_iter().enumerate() {
        if c.id == head {
            head_index = Some(idx);
        }
        let mut files: Vec<ChangedFile> = changes
            .remove(&c.id)
            .unwrap_or_default()
            .into_iter()
            .filter(|ch| ch.mode != "160000")
            .map(|ch| {
                let change_kind = match ch.status {
                    'A' => ChangeKind::Added,
                    'D' => ChangeKind::Deleted,
                    _ => ChangeKind::Modified,
                };
                let file_kind = file_kind_for(&ch.path);
                let (blob_hash, parse_error) = if change_kind == ChangeKind::Deleted {
                    (String::new(), false)
                } else {
                    match hashes.get(&ch.oid) {
                        Some(h) => (h.clone(), false),
                        None => (String::new(), true),
                    }
                };
                ChangedFile {
                    path: ch.path,
                    change_kind,
                    file_kind,
                    blob_hash,
                    parse_error,
                }
            })
            .collect();
        files.sort_by(|a, b| a.path.cmp(&b.path));
        files.dedup_by(|a, b| a.path == b.path);
        revisions.push(Revision {
            id: c.id,
            author: c.author,
            committer: c.committer,
            commit_time: c.time,
            log: c.log,
            files,
        });
    }

    Ok(ExtractedHistory {
        repository: CodeRepository {
            url,
            head_index,
            revisions,
        },
        java_blobs,
    })
}

fn read_commits(repo: &Path) -> Result<Vec<RawCommit>, IngestError> {
    let out = git::run(
        Some(repo),
        [
            "-c",
            "log.showSignature=false",
            "log",
            "-z",
            "--encoding=UTF-8",
            "--format=%H%x00%P%x00%an%x00%cn%x00%ct%x00%B",
            "HEAD",
        ],
    )
    .map_err(IngestError::Git)?;
    let text = String::from_utf8_lossy(&out);
    let fields: Vec<&str> = text.split('\0').collect();
    let mut commits = Vec::new();
    for rec in fields.chunks(6) {
        if rec.len() < 6 {
            continue;
        }
        let secs: i64 = rec[4]
            .trim()
            .parse()
            .map_err(|_| IngestError::Git(format!("bad commit time {:?}", rec[4])))?;
        commits.push(RawCommit {
            id: rec[0].trim().to_string(),
            first_parent: rec[1].split_whitespace().next().map(str::to_string),
            author: rec[2].to_string(),
            committer: rec[3].to_string(),
            time: secs.saturating_mul(1_000_000),
            log: rec[5].trim_end().to_string(),
        });
    }
    Ok(commits)
}

/// First-parent diffs of every commit in one `diff-tree --stdin` pass.
fn read_changes(
    repo: &Path,
    commits: &[RawCommit],
) -> Result<HashMap<String, Vec<RawChange>>, IngestError> {
    let mut input = String::new();
    for c in commits {
        input.push_str(&c.id);
        if let Some(p) = &c.first_parent {
            input.push(' ');
            input.push_str(p);
        }
        input.push('\n');
    }
    let out = {
        let mut buf = Vec::new();
        git::run_streaming(
            repo,
            &["diff-tree", "--stdin", "-r", "--root", "--no-renames", "-z"],
            input.into_bytes(),
            |r| {
                r.read_to_end(&mut buf)
                    .map_err(|e| IngestError::Git(format!("reading diff-tree output: {e}")))?;
                Ok(())
            },
        )?;
        buf
    };

    let mut changes: HashMap<String, Vec<RawChange>> = HashMap::new();
    let mut current: Option<String> = None;
    let mut tokens = out
        .split(|b| *b == 0)
        .map(|t| String::from_utf8_lossy(t).into_owned());
    while let Some(tok) = tokens.next() {
        if tok.is_empty() {
            continue;
        }
        if let Some(meta) = tok.strip_prefix(':') {
            let path = tokens.next().unwrap_or_default();
            let parts: Vec<&str> = meta.split_whitespace().collect();
            if parts.len() < 5 {
                return Err(IngestError::Git(format!(
                    "unexpected diff-tree entry {tok:?}"
                )));
            }
            let status = parts[4].chars().next().unwrap_or('M');
            let (mode, oid) = if status == 'D' {
                (parts[0], parts[2])
            } else {
                (parts[1], parts[3])
            };
            let commit = current
                .clone()
                .ok_or_else(|| IngestError::Git("diff entry before commit id".into()))?;
            changes.entry(commit).or_default().push(RawChange {
                status,
                mode: mode.to_string(),
                oid: oid.to_string(),
                path,
            });
        } else {
            changes.entry(tok.clone()).or_default();
            current = Some(tok);
        }
    }
    Ok(changes)
}

type BlobHashes = HashMap<String, String>;

/// SHA-256 of every requested blob; bytes are retained only for `keep`.
fn read_blobs(
    repo: &Path,
    oids: &[String],
    keep: &std::collections::HashSet<String>,
) -> Result<(BlobHashes, BTreeMap<String, Vec<u8>>), IngestError> {
    let mut hashes = HashMap::new();
    let mut kept = BTreeMap::new();
    if oids.is_empty() {
        return Ok((hashes, kept));
    }
    let input = oids.iter().map(|o| format!("{o}\n")).collect::<String>();
    git::run_streaming(repo, &["cat-file", "--batch"], input.into_bytes(), |r| {
        for _ in 0..oids.len() {
            let Some(header) = git::read_line(r)? else {
                break;
            };
            let parts: Vec<&str> = header.split(' ').collect();
            if parts.len() != 3 {
                // "<oid> missing" and similar: leave unhashed.
                continue;
            }
            let size: usize = parts[2]
                .parse()
                .map_err(|_| IngestError::Git(format!("bad cat-file header {header:?}")))?;
            let mut content = vec![0u8; size];
            r.read_exact(&mut content)
                .map_err(|e| IngestError::Git(format!("reading blob {}: {e}", parts[0])))?;
            let mut nl = [0u8; 1];
            r.read_exact(&mut nl)
                .map_err(|e| IngestError::Git(format!("reading blob {}: {e}", parts[0])))?;
            if parts[1] != "blob" {
                continue;
            }
            let oid = parts[0].to_string();
            let digest = sha256_hex(&content);
            if keep.contains(&oid) {
                kept.insert(digest.clone(), content);
            }
            hashes.insert(oid, digest);
        }
        Ok(())
    })?;
    Ok((hashes, kept))
}
