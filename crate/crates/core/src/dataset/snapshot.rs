use std::collections::BTreeMap;

use super::model::{ChangeKind, ChangedFile, CodeRepository, Timestamp};

/// Live files of `repo` as of `at` (or the full history), sorted by path.
///
/// Revisions are replayed in stored order, which is already the
/// `(commit_time, id)` total order, so replay stops at the first revision
/// newer than `at`.
pub fn compute_snapshot(repo: &CodeRepository, at: Option<Timestamp>) -> Vec<ChangedFile> {
    snapshot_refs(repo, at).into_iter().cloned().collect()
}

/// Borrowing variant of [`compute_snapshot`] used by the query engine.
pub fn snapshot_refs(repo: &CodeRepository, at: Option<Timestamp>) -> Vec<&ChangedFile> {
    let mut live: BTreeMap<&str, &ChangedFile> = BTreeMap::new();
    for rev in &repo.revisions {
        if matches!(at, Some(t) if rev.commit_time > t) {
            break;
        }
        for file in &rev.files {
            match file.change_kind {
                ChangeKind::Deleted => {
                    live.remove(file.path.as_str());
                }
                ChangeKind::Added | ChangeKind::Modified => {
                    live.insert(file.path.as_str(), file);
                }
            }
        }
    }
    live.into_values().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::model::{FileKind, Revision};

    fn file(path: &str, kind: ChangeKind, hash: &str) -> ChangedFile {
        ChangedFile {
            path: path.into(),
            change_kind: kind,
            file_kind: FileKind::SourceJava,
            blob_hash: hash.into(),
            parse_error: false,
        }
    }

    fn rev(id: &str, t: Timestamp, files: Vec<ChangedFile>) -> Revision {
        Revision {
            id: id.into(),
            author: "a".into(),
            committer: "a".into(),
            commit_time: t,
            log: String::new(),
            files,
        }
    }

    fn two_revision_fixture() -> CodeRepository {
        CodeRepository {
            url: String::new(),
            head_index: Some(1),
            revisions: vec![
                rev(
                    "r1",
                    100,
                    vec![
                        file("A.java", ChangeKind::Added, "a1"),
                        file("B.java", ChangeKind::Added, "b1"),
                    ],
                ),
                rev(
                    "r2",
                    200,
                    vec![
                        file("A.java", ChangeKind::Modified, "a2"),
                        file("B.java", ChangeKind::Deleted, ""),
                    ],
                ),
            ],
        }
    }

    #[test]
    fn empty_history_has_empty_snapshot() {
        assert!(compute_snapshot(&CodeRepository::default(), None).is_empty());
    }

    #[test]
    fn head_snapshot_of_two_revision_fixture() {
        let snap = compute_snapshot(&two_revision_fixture(), None);
        assert_eq!(snap, vec![file("A.java", ChangeKind::Modified, "a2")]);
    }

    #[test]
    fn snapshot_truncated_at_first_revision() {
        let snap = compute_snapshot(&two_revision_fixture(), Some(100));
        assert_eq!(
            snap,
            vec![
                file("A.java", ChangeKind::Added, "a1"),
                file("B.java", ChangeKind::Added, "b1"),
            ]
        );
    }

    #[test]
    fn snapshot_before_any_revision_is_empty() {
        assert!(compute_snapshot(&two_revision_fixture(), Some(99)).is_empty());
    }
}
