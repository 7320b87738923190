//! Bulk bare cloning with a bounded worker pool.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use super::git;
use crate::error::IngestError;
use crate::pool::run_indexed;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CloneTarget {
    /// `owner/name`; determines the clone directory `owner__name`.
    pub full_name: String,
    pub url: String,
}

impl CloneTarget {
    pub fn dir_name(&self) -> String {
        dir_name_for(&self.full_name)
    }
}

pub fn dir_name_for(full_name: &str) -> String {
    full_name.replacen('/', "__", 1)
}

/// Inverse of [`dir_name_for`]; directories without `__` map to themselves.
pub fn full_name_for_dir(dir_name: &str) -> String {
    match dir_name.split_once("__") {
        Some((owner, name)) if !owner.is_empty() && !name.is_empty() => format!("{owner}/{name}"),
        _ => dir_name.to_string(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CloneReport {
    pub requested: usize,
    pub succeeded: Vec<String>,
    pub failed: Vec<(String, String)>,
}

const GITHUB_WEB: &str = "https://github.com";

fn name_from_location(loc: &str) -> String {
    let trimmed = loc.trim_end_matches('/');
    let trimmed = trimmed.strip_suffix(".git").unwrap_or(trimmed);
    let segs: Vec<&str> = trimmed
        .rsplit(['/', ':'])
        .filter(|s| !s.is_empty())
        .take(2)
        .collect();
    match segs.as_slice() {
        [name, ..] if full_name_for_dir(name) != *name => full_name_for_dir(name),
        [name, owner] => format!("{owner}/{name}"),
        [name] => format!("local/{name}"),
        _ => "local/repo".to_string(),
    }
}

/// Parses one line of a `--repos` file: `owner/name`, a URL, or a local path.
pub fn parse_repo_line(line: &str) -> Option<CloneTarget> {
    let line = line.split('#').next().unwrap_or("").trim();
    if line.is_empty() {
        return None;
    }
    if line.contains("://") || line.starts_with("git@") {
        return Some(CloneTarget {
            full_name: name_from_location(line),
            url: line.to_string(),
        });
    }
    let path = Path::new(line);
    let is_github_name = line.matches('/').count() == 1
        && !line.starts_with('.')
        && !line.starts_with('/')
        && !path.exists();
    if is_github_name {
        return Some(CloneTarget {
            full_name: line.to_string(),
            url: format!("{GITHUB_WEB}/{line}.git"),
        });
    }
    let abs = fs::canonicalize(path).unwrap_or_else(|_| path.to_path_buf());
    Some(CloneTarget {
        full_name: name_from_location(&abs.to_string_lossy()),
        url: abs.to_string_lossy().into_owned(),
    })
}

pub fn targets_from_list(text: &str) -> Vec<CloneTarget> {
    text.lines().filter_map(parse_repo_line).collect()
}

/// Clone targets from a directory of metadata JSON files, sorted by name.
pub fn targets_from_metadata_dir(dir: &Path) -> Result<Vec<CloneTarget>, IngestError> {
    let mut targets = Vec::new();
    for path in json_files(dir)? {
        let text = fs::read_to_string(&path).map_err(|source| IngestError::Io {
            path: path.clone(),
            source,
        })?;
        let v: Value = serde_json::from_str(&text)
            .map_err(|e| IngestError::Format(format!("{}: {e}", path.display())))?;
        let full_name = v
            .get("full_name")
            .and_then(Value::as_str)
            .ok_or_else(|| IngestError::Format(format!("{}: missing full_name", path.display())))?;
        let url = v
            .get("clone_url")
            .and_then(Value::as_str)
            .map(str::to_string)
            .or_else(|| {
                v.get("html_url")
                    .and_then(Value::as_str)
                    .map(|u| format!("{u}.git"))
            })
            .unwrap_or_else(|| format!("{GITHUB_WEB}/{full_name}.git"));
        targets.push(CloneTarget {
            full_name: full_name.to_string(),
            url,
        });
    }
    targets.sort_by(|a, b| a.full_name.cmp(&b.full_name));
    Ok(targets)
}

pub(crate) fn json_files(dir: &Path) -> Result<Vec<PathBuf>, IngestError> {
    let entries = fs::read_dir(dir).map_err(|source| IngestError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

pub(crate) fn is_git_dir(path: &Path) -> bool {
    path.is_dir() && git::run(Some(path), ["rev-parse", "--git-dir"]).is_ok()
}

fn clone_one(target: &CloneTarget, dest: &Path) -> Result<(), String> {
    let final_dir = dest.join(target.dir_name());
    if is_git_dir(&final_dir) {
        return Ok(());
    }
    if final_dir.exists() {
        return Err(format!(
            "{} exists but is not a git repository",
            final_dir.display()
        ));
    }
    let tmp = dest.join(format!(".partial-{}", target.dir_name()));
    let _ = fs::remove_dir_all(&tmp);
    let result = git::run(
        None,
        [
            "clone".as_ref(),
            "--bare".as_ref(),
            "--quiet".as_ref(),
            "--".as_ref(),
            target.url.as_ref(),
            tmp.as_os_str(),
        ],
    );
    match result {
        Ok(_) => fs::rename(&tmp, &final_dir).map_err(|e| {
            let _ = fs::remove_dir_all(&tmp);
            format!("moving clone into place: {e}")
        }),
        Err(e) => {
            let _ = fs::remove_dir_all(&tmp);
            Err(e)
        }
    }
}

/// Clones every target bare into `dest/<owner>__<name>`. Existing clones
/// count as successes without touching the network; one failure never
/// stops the others.
pub fn clone_repositories(
    targets: &[CloneTarget],
    dest: &Path,
    jobs: usize,
) -> Result<CloneReport, IngestError> {
    fs::create_dir_all(dest).map_err(|source| IngestError::Io {
        path: dest.to_path_buf(),
        source,
    })?;
    let results = run_indexed(targets.len(), jobs, |i| clone_one(&targets[i], dest));
    let mut report = CloneReport {
        requested: targets.len(),
        ..CloneReport::default()
    };
    for (target, result) in targets.iter().zip(results) {
        match result {
            Ok(()) => report.succeeded.push(target.full_name.clone()),
            Err(reason) => report.failed.push((target.full_name.clone(), reason)),
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repo_lines() {
        assert_eq!(
            parse_repo_line("octo/demo"),
            Some(CloneTarget {
                full_name: "octo/demo".into(),
                url: "https://github.com/octo/demo.git".into()
            })
        );
        assert_eq!(parse_repo_line("  # comment"), None);
        assert_eq!(parse_repo_line(""), None);
        let t = parse_repo_line("file:///srv/git/acme/tool.git").unwrap();
        assert_eq!(t.full_name, "acme/tool");
        assert_eq!(t.url, "file:///srv/git/acme/tool.git");
        let t = parse_repo_line("git@github.com:acme/tool.git").unwrap();
        assert_eq!(t.full_name, "acme/tool");
        let t = parse_repo_line("file:///srv/clones/acme__tool").unwrap();
        assert_eq!(t.full_name, "acme/tool");
    }

    #[test]
    fn dir_names_round_trip() {
        assert_eq!(dir_name_for("octo/demo"), "octo__demo");
        assert_eq!(full_name_for_dir("octo__demo"), "octo/demo");
        assert_eq!(full_name_for_dir("plain"), "plain");
    }
}
