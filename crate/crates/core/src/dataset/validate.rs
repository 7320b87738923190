//! Structural checks over a dataset directory. Problems become report
//! entries; nothing here returns an error.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde_json::Value;

use super::model::{
    AstRoot, ChangeKind, ExpressionKind, FileKind, ModifierKind, Project, StatementKind, TypeKind,
};
use super::store::{jsonl_lines, read_manifest, ASTS_FILE, PROJECTS_FILE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Check {
    Manifest,
    ManifestCounts,
    Record,
    ProjectOrdering,
    RevisionOrdering,
    FileSorting,
    HeadIndex,
    DeletedBlob,
    DanglingReference,
    EnumValidity,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Check::Manifest => "manifest",
            Check::ManifestCounts => "manifest-counts",
            Check::Record => "record",
            Check::ProjectOrdering => "project-ordering",
            Check::RevisionOrdering => "revision-ordering",
            Check::FileSorting => "file-sorting",
            Check::HeadIndex => "head-index",
            Check::DeletedBlob => "deleted-blob",
            Check::DanglingReference => "dangling-reference",
            Check::EnumValidity => "enum-validity",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub check: Check,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.check, self.message)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub projects_checked: usize,
    pub revisions_checked: usize,
    pub asts_checked: usize,
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn count(&self, check: Check) -> usize {
        self.issues.iter().filter(|i| i.check == check).count()
    }

    fn push(&mut self, check: Check, message: impl Into<String>) {
        self.issues.push(Issue {
            check,
            message: message.into(),
        });
    }
}

struct BlobRef {
    project: String,
    revision: String,
    path: String,
    hash: String,
}

pub fn validate_dataset(dir: &Path) -> ValidationReport {
    let mut report = ValidationReport::default();

    let manifest = match read_manifest(dir) {
        Ok(m) => Some(m),
        Err(e) => {
            report.push(Check::Manifest, e.to_string());
            None
        }
    };

    let mut blob_refs = Vec::new();
    let projects_path = dir.join(PROJECTS_FILE);
    match jsonl_lines(&projects_path) {
        Ok(lines) => {
            let mut prev_id: Option<String> = None;
            for (lineno, line) in lines {
                report.projects_checked += 1;
                let value: Value = match serde_json::from_str(&line) {
                    Ok(v) => v,
                    Err(e) => {
                        report.push(Check::Record, format!("{PROJECTS_FILE} line {lineno}: {e}"));
                        continue;
                    }
                };
                let id = value
                    .get("id")
                    .and_then(Value::as_str)
                    .unwrap_or_default()
                    .to_string();
                if let Some(prev) = &prev_id {
                    if *prev >= id {
                        report.push(
                            Check::ProjectOrdering,
                            format!("project {id:?} does not sort strictly after {prev:?}"),
                        );
                    }
                }
                let enums_before = report.count(Check::EnumValidity);
                check_project(&value, &id, &mut report, &mut blob_refs);
                if report.count(Check::EnumValidity) == enums_before {
                    if let Err(e) = serde_json::from_value::<Project>(value) {
                        report.push(
                            Check::Record,
                            format!("{PROJECTS_FILE} line {lineno} (project {id:?}): {e}"),
                        );
                    }
                }
                prev_id = Some(id);
            }
        }
        Err(e) => report.push(Check::Record, e.to_string()),
    }

    let mut ast_hashes = BTreeSet::new();
    let asts_path = dir.join(ASTS_FILE);
    match jsonl_lines(&asts_path) {
        Ok(lines) => {
            let mut prev: Option<String> = None;
            for (lineno, line) in lines {
                report.asts_checked += 1;
                let value: Value = match serde_json::from_str(&line) {
                    Ok(v) => v,
                    Err(e) => {
                        report.push(Check::Record, format!("{ASTS_FILE} line {lineno}: {e}"));
                        continue;
                    }
                };
                let hash = value
                    .get("blob_hash")
                    .and_then(Value::as_str)
                    .unwrap_or_default()
                    .to_string();
                if let Some(p) = &prev {
                    if *p >= hash {
                        report.push(
                            Check::Record,
                            format!("{ASTS_FILE} line {lineno}: blob {hash} out of order"),
                        );
                    }
                }
                let ctx = format!("AST {hash}");
                let ast = value.get("ast").cloned().unwrap_or(Value::Null);
                let enums_before = report.count(Check::EnumValidity);
                check_ast(&ast, &ctx, &mut report);
                if report.count(Check::EnumValidity) == enums_before {
                    if let Err(e) = serde_json::from_value::<AstRoot>(ast) {
                        report.push(Check::Record, format!("{ASTS_FILE} line {lineno}: {e}"));
                    }
                }
                ast_hashes.insert(hash.clone());
                prev = Some(hash);
            }
        }
        Err(e) => report.push(Check::Record, e.to_string()),
    }

    for r in &blob_refs {
        if !ast_hashes.contains(&r.hash) {
            report.push(
                Check::DanglingReference,
                format!(
                    "project {:?} revision {} file {} references missing AST {}",
                    r.project, r.revision, r.path, r.hash
                ),
            );
        }
    }

    if let Some(m) = manifest {
        if m.project_count != report.projects_checked {
            report.push(
                Check::ManifestCounts,
                format!(
                    "manifest project_count={} but {} project records",
                    m.project_count, report.projects_checked
                ),
            );
        }
        if m.ast_count != report.asts_checked {
            report.push(
                Check::ManifestCounts,
                format!(
                    "manifest ast_count={} but {} AST records",
                    m.ast_count, report.asts_checked
                ),
            );
        }
    }
    report
}

fn check_enum(
    value: Option<&Value>,
    members: &[&str],
    what: &str,
    ctx: &str,
    report: &mut ValidationReport,
) -> Option<String> {
    match value.and_then(Value::as_str) {
        Some(s) if members.contains(&s) => Some(s.to_string()),
        other => {
            report.push(
                Check::EnumValidity,
                format!("{ctx}: invalid {what} {other:?} (expected one of {members:?})"),
            );
            None
        }
    }
}

fn array<'v>(value: &'v Value, key: &str) -> &'v [Value] {
    value
        .get(key)
        .and_then(Value::as_array)
        .map(Vec::as_slice)
        .unwrap_or(&[])
}

fn check_project(
    project: &Value,
    id: &str,
    report: &mut ValidationReport,
    blob_refs: &mut Vec<BlobRef>,
) {
    let repo = project.get("repository").unwrap_or(&Value::Null);
    let revisions = array(repo, "revisions");
    report.revisions_checked += revisions.len();

    match repo.get("head_index") {
        Some(Value::Null) | None if revisions.is_empty() => {}
        Some(Value::Number(n)) if n.as_u64().is_some_and(|h| (h as usize) < revisions.len()) => {}
        other => report.push(
            Check::HeadIndex,
            format!(
                "project {id:?}: head_index {other:?} invalid for {} revisions",
                revisions.len()
            ),
        ),
    }

    let mut prev: Option<(i64, String)> = None;
    for rev in revisions {
        let rev_id = rev.get("id").and_then(Value::as_str).unwrap_or_default();
        let time = rev.get("commit_time").and_then(Value::as_i64).unwrap_or(0);
        let key = (time, rev_id.to_string());
        if let Some(p) = &prev {
            if *p >= key {
                report.push(
                    Check::RevisionOrdering,
                    format!(
                        "project {id:?}: revision {rev_id} is not after revision {}",
                        p.1
                    ),
                );
            }
        }
        prev = Some(key);

        let mut prev_path: Option<&str> = None;
        let mut sorted = true;
        for file in array(rev, "files") {
            let path = file.get("path").and_then(Value::as_str).unwrap_or_default();
            if prev_path.is_some_and(|p| p >= path) {
                sorted = false;
            }
            prev_path = Some(path);

            let ctx = format!("project {id:?} revision {rev_id} file {path}");
            let change = check_enum(
                file.get("change_kind"),
                ChangeKind::MEMBERS,
                "change_kind",
                &ctx,
                report,
            );
            let kind = check_enum(
                file.get("file_kind"),
                FileKind::MEMBERS,
                "file_kind",
                &ctx,
                report,
            );
            let hash = file
                .get("blob_hash")
                .and_then(Value::as_str)
                .unwrap_or_default();
            let parse_error = file
                .get("parse_error")
                .and_then(Value::as_bool)
                .unwrap_or(false);
            if change.as_deref() == Some("DELETED") && !hash.is_empty() {
                report.push(
                    Check::DeletedBlob,
                    format!("{ctx}: DELETED file carries a blob_hash"),
                );
            }
            if change.as_deref() != Some("DELETED")
                && kind.as_deref() == Some("SOURCE_JAVA")
                && !parse_error
                && !hash.is_empty()
            {
                blob_refs.push(BlobRef {
                    project: id.to_string(),
                    revision: rev_id.to_string(),
                    path: path.to_string(),
                    hash: hash.to_string(),
                });
            }
        }
        if !sorted {
            report.push(
                Check::FileSorting,
                format!("project {id:?} revision {rev_id}: files not sorted by path"),
            );
        }
    }
}

fn check_ast(ast: &Value, ctx: &str, report: &mut ValidationReport) {
    let ns = ast.get("namespace").unwrap_or(&Value::Null);
    for decl in array(ns, "declarations") {
        check_declaration(decl, ctx, report);
    }
}

fn check_modifiers(node: &Value, ctx: &str, report: &mut ValidationReport) {
    for m in array(node, "modifiers") {
        let kind = check_enum(
            m.get("kind"),
            ModifierKind::MEMBERS,
            "modifier kind",
            ctx,
            report,
        );
        if kind.as_deref() == Some("ANNOTATION")
            && m.get("annotation_name")
                .and_then(Value::as_str)
                .unwrap_or_default()
                .is_empty()
        {
            report.push(
                Check::EnumValidity,
                format!("{ctx}: annotation modifier without a name"),
            );
        }
    }
}

fn check_declaration(decl: &Value, ctx: &str, report: &mut ValidationReport) {
    check_enum(
        decl.get("kind"),
        TypeKind::MEMBERS,
        "declaration kind",
        ctx,
        report,
    );
    check_modifiers(decl, ctx, report);
    for v in array(decl, "fields") {
        check_modifiers(v, ctx, report);
    }
    for m in array(decl, "methods") {
        check_modifiers(m, ctx, report);
        for p in array(m, "params") {
            check_modifiers(p, ctx, report);
        }
        for s in array(m, "statements") {
            check_statement(s, ctx, report);
        }
    }
    for n in array(decl, "nested") {
        check_declaration(n, ctx, report);
    }
}

fn check_statement(stmt: &Value, ctx: &str, report: &mut ValidationReport) {
    check_enum(
        stmt.get("kind"),
        StatementKind::MEMBERS,
        "statement kind",
        ctx,
        report,
    );
    for s in array(stmt, "statements") {
        check_statement(s, ctx, report);
    }
    for e in array(stmt, "expressions") {
        check_expression(e, ctx, report);
    }
}

fn check_expression(expr: &Value, ctx: &str, report: &mut ValidationReport) {
    check_enum(
        expr.get("kind"),
        ExpressionKind::MEMBERS,
        "expression kind",
        ctx,
        report,
    );
    for e in array(expr, "expressions") {
        check_expression(e, ctx, report);
    }
}
