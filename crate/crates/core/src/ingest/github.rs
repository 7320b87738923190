//! GitHub REST client: repository search and per-repository metadata.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Duration;

use serde_json::Value;

use crate::dataset::Timestamp;
use crate::error::IngestError;

pub const DEFAULT_API_BASE: &str = "https://api.github.com";
pub const SEARCH_CAP: usize = 1000;
const PER_PAGE: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct RepoMetadata {
    pub full_name: String,
    pub html_url: String,
    pub stargazers_count: u64,
    pub fork: bool,
    pub default_branch: String,
    pub language: Option<String>,
    pub created_at: Timestamp,
    /// The API object as received.
    pub raw: Value,
}

pub fn parse_timestamp(text: &str) -> Option<Timestamp> {
    chrono::DateTime::parse_from_rfc3339(text)
        .ok()
        .map(|t| t.timestamp_micros())
}

impl RepoMetadata {
    pub fn from_json(v: &Value) -> Result<Self, IngestError> {
        let field = |k: &str| {
            v.get(k)
                .ok_or_else(|| IngestError::Format(format!("missing field {k:?}")))
        };
        let str_field = |k: &str| -> Result<String, IngestError> {
            field(k)?
                .as_str()
                .map(str::to_string)
                .ok_or_else(|| IngestError::Format(format!("field {k:?} is not a string")))
        };
        let full_name = str_field("full_name")?;
        if full_name.matches('/').count() != 1 {
            return Err(IngestError::Format(format!(
                "full_name {full_name:?} is not owner/name"
            )));
        }
        let stargazers_count = field("stargazers_count")?.as_u64().ok_or_else(|| {
            IngestError::Format("stargazers_count is not a non-negative integer".into())
        })?;
        let created = str_field("created_at")?;
        Ok(RepoMetadata {
            html_url: str_field("html_url")?,
            stargazers_count,
            fork: v.get("fork").and_then(Value::as_bool).unwrap_or(false),
            default_branch: v
                .get("default_branch")
                .and_then(Value::as_str)
                .unwrap_or_default()
                .to_string(),
            language: v
                .get("language")
                .and_then(Value::as_str)
                .map(str::to_string),
            created_at: parse_timestamp(&created)
                .ok_or_else(|| IngestError::Format(format!("bad created_at {created:?}")))?,
            full_name,
            raw: v.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchCriteria {
    pub query: String,
    pub min_stars: u64,
    pub language: Option<String>,
    pub max_results: usize,
}

impl SearchCriteria {
    pub fn validate(&self) -> Result<(), IngestError> {
        if self.max_results == 0 || self.max_results > SEARCH_CAP {
            return Err(IngestError::Input(format!(
                "max_results must be in 1..={SEARCH_CAP} (the search API cap), got {}",
                self.max_results
            )));
        }
        Ok(())
    }

    fn search_expression(&self) -> String {
        let mut q = self.query.trim().to_string();
        if self.min_stars > 0 {
            q.push_str(&format!(" stars:>={}", self.min_stars));
        }
        if let Some(lang) = &self.language {
            q.push_str(&format!(" language:{lang}"));
        }
        q.trim().to_string()
    }

    fn accepts(&self, m: &RepoMetadata) -> bool {
        m.stargazers_count >= self.min_stars
            && self.language.as_ref().is_none_or(|want| {
                m.language
                    .as_ref()
                    .is_some_and(|have| have.eq_ignore_ascii_case(want))
            })
    }
}

struct HttpReply {
    status: u16,
    body: String,
}

pub struct GithubClient {
    agent: ureq::Agent,
    api_base: String,
    token: Option<String>,
    retry_delays: Vec<Duration>,
}

impl GithubClient {
    pub fn new(api_base: &str, token: Option<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(60)))
            .user_agent("miner/0.1")
            .build()
            .into();
        GithubClient {
            agent,
            api_base: api_base.trim_end_matches('/').to_string(),
            token: token.filter(|t| !t.is_empty()),
            retry_delays: [1, 2, 4].map(Duration::from_secs).to_vec(),
        }
    }

    /// Overrides the backoff schedule (one entry per retry).
    pub fn with_retry_delays(mut self, delays: Vec<Duration>) -> Self {
        self.retry_delays = delays;
        self
    }

    fn get(&self, path: &str, query: &[(&str, String)]) -> Result<HttpReply, IngestError> {
        let url = format!("{}{}", self.api_base, path);
        let mut attempt = 0;
        loop {
            let mut req = self
                .agent
                .get(&url)
                .header("Accept", "application/vnd.github+json");
            for (k, v) in query {
                req = req.query(*k, v);
            }
            if let Some(t) = &self.token {
                req = req.header("Authorization", &format!("Bearer {t}"));
            }
            let retryable = match req.call() {
                Ok(mut resp) => {
                    let status = resp.status().as_u16();
                    let header = |name: &str| {
                        resp.headers()
                            .get(name)
                            .and_then(|v| v.to_str().ok())
                            .map(str::to_string)
                    };
                    let remaining = header("x-ratelimit-remaining");
                    let reset =
                        header("x-ratelimit-reset").and_then(|r| r.trim().parse::<i64>().ok());
                    let retry_after =
                        header("retry-after").and_then(|r| r.trim().parse::<i64>().ok());
                    if (status == 403 || status == 429) && remaining.as_deref() == Some("0") {
                        return Err(IngestError::RateLimited {
                            reset: reset.unwrap_or(0),
                        });
                    }
                    if status == 429 {
                        let now = chrono::Utc::now().timestamp();
                        return Err(IngestError::RateLimited {
                            reset: reset.unwrap_or(now + retry_after.unwrap_or(60)),
                        });
                    }
                    let body =
                        resp.body_mut()
                            .read_to_string()
                            .map_err(|e| IngestError::Network {
                                status: Some(status),
                                message: format!("reading body: {e}"),
                            })?;
                    if status < 500 {
                        return Ok(HttpReply { status, body });
                    }
                    IngestError::Network {
                        status: Some(status),
                        message: format!("GET {url} failed"),
                    }
                }
                Err(e) => IngestError::Network {
                    status: None,
                    message: format!("GET {url}: {e}"),
                },
            };
            match self.retry_delays.get(attempt) {
                Some(delay) => {
                    log::warn!("{retryable}; retrying in {delay:?}");
                    thread::sleep(*delay);
                    attempt += 1;
                }
                None => return Err(retryable),
            }
        }
    }
}

/// Searches repositories, following pagination until `max_results`
/// matches are collected or the results run out. Output is deduplicated by
/// `full_name` and ordered by descending star count.
pub fn list_repositories(
    criteria: &SearchCriteria,
    client: &GithubClient,
) -> Result<Vec<RepoMetadata>, IngestError> {
    criteria.validate()?;
    let q = criteria.search_expression();
    let mut seen = HashSet::new();
    let mut found = Vec::new();
    let max_pages = SEARCH_CAP / PER_PAGE;
    for page in 1..=max_pages {
        let reply = client.get(
            "/search/repositories",
            &[
                ("q", q.clone()),
                ("sort", "stars".into()),
                ("order", "desc".into()),
                ("per_page", PER_PAGE.to_string()),
                ("page", page.to_string()),
            ],
        )?;
        if !(200..300).contains(&reply.status) {
            return Err(IngestError::Network {
                status: Some(reply.status),
                message: format!("search failed: {}", reply.body.trim()),
            });
        }
        let body: Value = serde_json::from_str(&reply.body)
            .map_err(|e| IngestError::Format(format!("search response: {e}")))?;
        let items = body
            .get("items")
            .and_then(Value::as_array)
            .ok_or_else(|| IngestError::Format("search response has no items array".into()))?;
        for item in items {
            let meta = RepoMetadata::from_json(item)?;
            if criteria.accepts(&meta) && seen.insert(meta.full_name.clone()) {
                found.push(meta);
            }
        }
        let total = body
            .get("total_count")
            .and_then(Value::as_u64)
            .map(|t| t as usize);
        let exhausted =
            items.len() < PER_PAGE || total.is_some_and(|t| page * PER_PAGE >= t.min(SEARCH_CAP));
        if exhausted || found.len() >= criteria.max_results {
            break;
        }
    }
    found.sort_by(|a, b| {
        b.stargazers_count
            .cmp(&a.stargazers_count)
            .then_with(|| a.full_name.cmp(&b.full_name))
    });
    found.truncate(criteria.max_results);
    Ok(found)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FetchReport {
    pub written: Vec<PathBuf>,
    pub skipped: Vec<String>,
    pub failed: Vec<(String, String)>,
}

impl FetchReport {
    pub fn is_partial_failure(&self) -> bool {
        !self.failed.is_empty()
    }
}

pub fn metadata_path(out_dir: &Path, full_name: &str) -> PathBuf {
    out_dir.join(format!("{}.json", super::clone::dir_name_for(full_name)))
}

/// Writes `out_dir/<owner>__<name>.json` for every metadata record.
pub fn write_metadata_files(
    records: &[RepoMetadata],
    out_dir: &Path,
) -> Result<Vec<PathBuf>, IngestError> {
    fs::create_dir_all(out_dir).map_err(|source| IngestError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut paths = Vec::new();
    for m in records {
        let path = metadata_path(out_dir, &m.full_name);
        let mut text = serde_json::to_string_pretty(&m.raw).expect("JSON value serializes");
        text.push('\n');
        fs::write(&path, text).map_err(|source| IngestError::Io {
            path: path.clone(),
            source,
        })?;
        paths.push(path);
    }
    Ok(paths)
}

/// Fetches `/repos/{owner}/{name}` for each name, sequentially, saving the
/// response body verbatim. Missing repositories are per-name failures; a
/// rate-limit or persistent network error aborts the whole fetch.
pub fn fetch_repo_metadata(
    full_names: &[String],
    out_dir: &Path,
    client: &GithubClient,
    force: bool,
) -> Result<FetchReport, IngestError> {
    fs::create_dir_all(out_dir).map_err(|source| IngestError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut report = FetchReport::default();
    for name in full_names {
        let name = name.trim();
        if name.matches('/').count() != 1 || name.starts_with('/') || name.ends_with('/') {
            report
                .failed
                .push((name.to_string(), "not an owner/name pair".into()));
            continue;
        }
        let path = metadata_path(out_dir, name);
        if path.exists() && !force {
            log::warn!(
                "{} already present, skipping (use --force to refetch)",
                path.display()
            );
            report.skipped.push(name.to_string());
            continue;
        }
        let reply = client.get(&format!("/repos/{name}"), &[])?;
        match reply.status {
            200..=299 => {
                let v: Value = serde_json::from_str(&reply.body)
                    .map_err(|e| IngestError::Format(format!("{name}: {e}")))?;
                if let Err(e) = RepoMetadata::from_json(&v) {
                    report.failed.push((name.to_string(), e.to_string()));
                    continue;
                }
                fs::write(&path, &reply.body).map_err(|source| IngestError::Io {
                    path: path.clone(),
                    source,
                })?;
                report.written.push(path);
            }
            404 => report
                .failed
                .push((name.to_string(), "not found (HTTP 404)".into())),
            s => report
                .failed
                .push((name.to_string(), format!("HTTP {s}: {}", reply.body.trim()))),
        }
    }
    Ok(report)
}
