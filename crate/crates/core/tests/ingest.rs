use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Duration;

use miner_core::dataset::{read_dataset, validate_dataset, ChangeKind, FileKind};
use miner_core::ingest::{
    build_dataset, clone_repositories, extract_history, fetch_repo_metadata, full_name_for_dir,
    list_repositories, parse_repo_line, sha256_hex, targets_from_metadata_dir, CloneTarget,
    GithubClient, SearchCriteria,
};
use miner_core::IngestError;
use miner_testkit::{annotation_corpus, repo_json, CannedResponse, FixtureServer, GitRepo, Route};

fn listing(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        out.insert(
            p.file_name().unwrap().to_string_lossy().into_owned(),
            fs::read(&p).unwrap(),
        );
    }
    out
}

fn kinds(files: &[miner_core::dataset::ChangedFile]) -> Vec<(String, ChangeKind, FileKind)> {
    files
        .iter()
        .map(|f| (f.path.clone(), f.change_kind, f.file_kind))
        .collect()
}

#[test]
fn single_empty_commit() {
    let tmp = tempfile::tempdir().unwrap();
    let repo = GitRepo::init(&tmp.path().join("r"));
    repo.commit("nothing", 1_000);
    let hist = extract_history(&repo.path).unwrap();
    assert_eq!(hist.revisions.len(), 1);
    assert!(hist.revisions[0].files.is_empty());
    assert_eq!(hist.head_index, Some(0));
    assert_eq!(hist.revisions[0].commit_time, 1_000_000_000);
}

#[test]
fn unborn_repository_has_no_revisions() {
    let tmp = tempfile::tempdir().unwrap();
    let repo = GitRepo::init(&tmp.path().join("r"));
    let hist = extract_history(&repo.path).unwrap();
    assert!(hist.revisions.is_empty());
    assert_eq!(hist.head_index, None);
}

#[test]
fn not_a_repository_is_an_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let err = extract_history(tmp.path()).unwrap_err();
    assert!(matches!(err, IngestError::Input(_)), "{err}");
}

#[test]
fn two_commit_history_matches_git() {
    let tmp = tempfile::tempdir().unwrap();
    let repo = GitRepo::init(&tmp.path().join("r"));
    repo.write("A.java", "class A {}\n");
    repo.write("B.txt", "b\n");
    let c1 = repo.commit("one", 100);
    repo.write("A.java", "class A { int x; }\n");
    repo.remove("B.txt");
    let c2 = repo.commit("two", 200);

    let hist = extract_history(&repo.path).unwrap();
    assert_eq!(hist.revisions.len(), 2);
    let (r1, r2) = (&hist.revisions[0], &hist.revisions[1]);
    assert_eq!(r1.id, c1);
    assert_eq!(r2.id, c2);
    assert_eq!(hist.head_index, Some(1));
    assert_eq!(
        kinds(&r1.files),
        vec![
            ("A.java".into(), ChangeKind::Added, FileKind::SourceJava),
            ("B.txt".into(), ChangeKind::Added, FileKind::Other),
        ]
    );
    assert_eq!(
        kinds(&r2.files),
        vec![
            ("A.java".into(), ChangeKind::Modified, FileKind::SourceJava),
            ("B.txt".into(), ChangeKind::Deleted, FileKind::Other),
        ]
    );
    assert_eq!(r2.files[0].blob_hash, sha256_hex(b"class A { int x; }\n"));
    assert_eq!(r2.files[1].blob_hash, "");
    assert_eq!(r1.author, "Fixture Author");
    assert_eq!(r1.committer, "Fixture Committer");
    assert_eq!(r2.log, "two");

    for rev in &hist.revisions {
        let oracle: Vec<(char, String)> = repo.first_parent_changes(&rev.id);
        let got: Vec<(char, String)> = rev
            .files
            .iter()
            .map(|f| {
                let s = match f.change_kind {
                    ChangeKind::Added => 'A',
                    ChangeKind::Modified => 'M',
                    ChangeKind::Deleted => 'D',
                };
                (s, f.path.clone())
            })
            .collect();
        assert_eq!(got, oracle);
    }
}

#[test]
fn merge_commit_diffs_against_first_parent() {
    let tmp = tempfile::tempdir().unwrap();
    let repo = GitRepo::init(&tmp.path().join("r"));
    repo.write("base.txt", "base\n");
    repo.commit("base", 10);
    repo.checkout("side", true);
    repo.write("side/S.java", "class S {}\n");
    repo.commit("side work", 20);
    repo.checkout("main", false);
    repo.write("main.txt", "main\n");
    repo.commit("main work", 30);
    let merge = repo.merge("side", "merge side", 40);

    let hist = extract_history(&repo.path).unwrap();
    assert_eq!(hist.revisions.len(), 4);
    let times: Vec<i64> = hist.revisions.iter().map(|r| r.commit_time).collect();
    assert!(times.windows(2).all(|w| w[0] <= w[1]));
    let m = hist.revisions.iter().find(|r| r.id == merge).unwrap();
    assert_eq!(hist.head_index, Some(3));
    assert_eq!(
        kinds(&m.files),
        vec![(
            "side/S.java".into(),
            ChangeKind::Added,
            FileKind::SourceJava
        )]
    );
    assert_eq!(
        repo.first_parent_changes(&merge),
        vec![('A', "side/S.java".to_string())]
    );
}

#[test]
fn replayed_history_matches_git_tree_at_every_revision() {
    let tmp = tempfile::tempdir().unwrap();
    let paths = annotation_corpus(tmp.path());
    for p in &paths {
        let repo = GitRepo { path: p.clone() };
        let hist = extract_history(p).unwrap();
        let mut live: BTreeMap<String, ()> = BTreeMap::new();
        // Only commits on the first-parent chain are guaranteed to be
        // replayable in order; check those.
        let chain = repo.git(&["rev-list", "--first-parent", "--reverse", "HEAD"]);
        let chain: Vec<&str> = chain.lines().collect();
        for id in chain {
            let rev = hist.revisions.iter().find(|r| r.id == id).unwrap();
            for f in &rev.files {
                if f.change_kind == ChangeKind::Deleted {
                    live.remove(&f.path);
                } else {
                    live.insert(f.path.clone(), ());
                }
            }
            let got: Vec<String> = live.keys().cloned().collect();
            assert_eq!(got, repo.tree_files(id), "{} at {id}", p.display());
        }
    }
}

#[test]
fn clone_local_repositories() {
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("src");
    let paths = annotation_corpus(&src);
    let dest = tmp.path().join("clones");
    let targets: Vec<CloneTarget> = paths[..2]
        .iter()
        .map(|p| CloneTarget {
            full_name: full_name_for_dir(&p.file_name().unwrap().to_string_lossy()),
            url: format!("file://{}", p.display()),
        })
        .collect();
    let report = clone_repositories(&targets, &dest, 2).unwrap();
    assert_eq!(report.requested, 2);
    assert_eq!(report.succeeded, vec!["acme/alpha", "acme/beta"]);
    assert!(report.failed.is_empty());
    for d in ["acme__alpha", "acme__beta"] {
        let dir = dest.join(d);
        assert!(dir.join("objects").is_dir());
        assert!(!dir.join(".git").exists(), "clone must be bare");
        let repo = GitRepo { path: dir };
        repo.git(&["fsck", "--no-progress"]);
    }

    // Already-present clones succeed without contacting the source.
    let moved = tmp.path().join("moved");
    fs::rename(&src, &moved).unwrap();
    let again = clone_repositories(&targets, &dest, 1).unwrap();
    assert_eq!(again.succeeded.len(), 2);
}

#[test]
fn clone_failure_does_not_stop_others() {
    let tmp = tempfile::tempdir().unwrap();
    let paths = annotation_corpus(&tmp.path().join("src"));
    let good = parse_repo_line(&paths[2].to_string_lossy()).unwrap();
    let bad = parse_repo_line(&tmp.path().join("nope/missing").to_string_lossy()).unwrap();
    let report = clone_repositories(&[good, bad], &tmp.path().join("clones"), 2).unwrap();
    assert_eq!(report.requested, 2);
    assert_eq!(report.succeeded.len(), 1);
    assert_eq!(report.failed.len(), 1);
    assert!(!report.failed[0].1.is_empty());
    let leftovers: Vec<_> = fs::read_dir(tmp.path().join("clones"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert_eq!(leftovers.len(), 1, "{leftovers:?}");
}

#[test]
fn clone_empty_list() {
    let tmp = tempfile::tempdir().unwrap();
    let report = clone_repositories(&[], tmp.path(), 4).unwrap();
    assert_eq!(report.requested, 0);
}

#[test]
fn clone_targets_from_metadata() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("octo__demo.json"),
        repo_json("octo/demo", 3, Some("Java")),
    )
    .unwrap();
    let t = targets_from_metadata_dir(tmp.path()).unwrap();
    assert_eq!(t.len(), 1);
    assert_eq!(t[0].full_name, "octo/demo");
    assert_eq!(t[0].url, "https://github.com/octo/demo.git");
}

fn corpus_clones(root: &Path) -> std::path::PathBuf {
    let paths = annotation_corpus(&root.join("src"));
    let targets: Vec<CloneTarget> = paths
        .iter()
        .map(|p| CloneTarget {
            full_name: full_name_for_dir(&p.file_name().unwrap().to_string_lossy()),
            url: format!("file://{}", p.display()),
        })
        .collect();
    let dest = root.join("clones");
    let report = clone_repositories(&targets, &dest, 3).unwrap();
    assert_eq!(report.succeeded.len(), 3, "{:?}", report.failed);
    dest
}

#[test]
fn build_is_independent_of_jobs_and_valid() {
    let tmp = tempfile::tempdir().unwrap();
    let clones = corpus_clones(tmp.path());
    let meta = tmp.path().join("meta");
    fs::create_dir_all(&meta).unwrap();
    fs::write(
        meta.join("acme__alpha.json"),
        repo_json("acme/alpha", 42, Some("Java")),
    )
    .unwrap();

    let a = tmp.path().join("d1");
    let b = tmp.path().join("d8");
    let ra = build_dataset(&clones, Some(&meta), &a, "fixture", 1).unwrap();
    let rb = build_dataset(&clones, Some(&meta), &b, "fixture", 8).unwrap();
    assert_eq!(listing(&a), listing(&b));
    assert_eq!(ra.projects, 3);
    assert_eq!(ra.summary(), rb.summary());

    let report = validate_dataset(&a);
    assert!(report.is_valid(), "{:?}", report.issues);

    let ds = read_dataset(&a).unwrap();
    let ids: Vec<&str> = ds.projects().iter().map(|p| p.id.as_str()).collect();
    assert_eq!(ids, vec!["acme/alpha", "acme/beta", "octo/gamma"]);
    let alpha = ds.project_by_id("acme/alpha").unwrap();
    assert_eq!(alpha.stars, 42);
    assert_eq!(alpha.url, "https://github.com/acme/alpha");
    assert_eq!(
        alpha.metadata.get("language").map(String::as_str),
        Some("Java")
    );
    let beta = ds.project_by_id("acme/beta").unwrap();
    assert_eq!((beta.stars, beta.created), (0, 0));
}

#[test]
fn build_parses_each_distinct_blob_once() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().join("src");
    // Two repositories share one identical file and revert to earlier content.
    for name in ["o__one", "o__two"] {
        let r = GitRepo::init(&root.join(name));
        r.write("Same.java", "class Same {}\n");
        r.commit("a", 10);
        r.write("Same.java", "class Same { int v; }\n");
        r.commit("b", 20);
        r.write("Same.java", "class Same {}\n");
        r.commit("c", 30);
    }
    let r = GitRepo::init(&root.join("o__three"));
    r.write("Bad.java", "class Bad {\n");
    r.write("notes.txt", "x\n");
    r.commit("broken", 5);

    let out = tmp.path().join("ds");
    let report = build_dataset(&root, None, &out, "dedup", 4).unwrap();
    assert_eq!(report.parse_invocations, 3);
    assert_eq!(report.distinct_asts, 2);
    assert_eq!(report.parse_failures, 1);
    let ds = read_dataset(&out).unwrap();
    assert_eq!(ds.manifest().ast_count, 2);
    let three = ds.project_by_id("o/three").unwrap();
    let bad = &three.repository.revisions[0].files[0];
    assert!(bad.parse_error);
    assert!(!three.repository.revisions[0].files[1].parse_error);
    assert!(validate_dataset(&out).is_valid());
}

#[test]
fn build_empty_root_and_skips_non_repositories() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().join("src");
    fs::create_dir_all(&root).unwrap();
    let report = build_dataset(&root, None, &tmp.path().join("e"), "empty", 2).unwrap();
    assert_eq!(report.manifest.unwrap().project_count, 0);

    fs::create_dir_all(root.join("junk__dir")).unwrap();
    let report = build_dataset(&root, None, &tmp.path().join("f"), "junk", 2).unwrap();
    assert_eq!(report.projects, 0);
    assert_eq!(report.skipped.len(), 1);
}

fn fast(server: &FixtureServer) -> GithubClient {
    GithubClient::new(&server.base, Some("sekrit".into()))
        .with_retry_delays(vec![Duration::from_millis(1); 3])
}

fn search_page(items: &[String]) -> String {
    format!(
        r#"{{"total_count":{},"incomplete_results":false,"items":[{}]}}"#,
        items.len(),
        items.join(",")
    )
}

#[test]
fn search_filters_and_orders() {
    let items = vec![
        repo_json("a/low", 5, Some("Java")),
        repo_json("b/high", 50, Some("Java")),
        repo_json("c/mid", 20, Some("Java")),
        repo_json("b/high", 50, Some("Java")),
    ];
    let server = FixtureServer::start(vec![Route::new(
        "/search/repositories",
        CannedResponse::json(200, &search_page(&items)),
    )]);
    let client = fast(&server);
    let criteria = SearchCriteria {
        query: "mining".into(),
        min_stars: 10,
        language: Some("Java".into()),
        max_results: 10,
    };
    let found = list_repositories(&criteria, &client).unwrap();
    let names: Vec<&str> = found.iter().map(|m| m.full_name.as_str()).collect();
    assert_eq!(names, vec!["b/high", "c/mid"]);

    let one = list_repositories(
        &SearchCriteria {
            max_results: 1,
            min_stars: 0,
            ..criteria.clone()
        },
        &client,
    )
    .unwrap();
    assert_eq!(one.len(), 1);

    let reqs = server.requests();
    assert!(reqs[0].target.contains("sort=stars"));
    assert!(reqs[0].target.contains("per_page=100"));
    assert!(reqs[0].target.contains("page=1"));
    assert_eq!(reqs[0].authorization.as_deref(), Some("Bearer sekrit"));
}

#[test]
fn search_empty_and_paginated() {
    let server = FixtureServer::start(vec![Route::new(
        "/search/repositories",
        CannedResponse::json(200, &search_page(&[])),
    )]);
    let criteria = SearchCriteria {
        query: "nothing".into(),
        min_stars: 0,
        language: None,
        max_results: 5,
    };
    assert!(list_repositories(&criteria, &fast(&server))
        .unwrap()
        .is_empty());

    let page1: Vec<String> = (0..100)
        .map(|i| repo_json(&format!("p/r{i:03}"), 1000 - i, None))
        .collect();
    let page2 = [repo_json("p/last", 1, None)];
    let body1 = format!(r#"{{"total_count":101,"items":[{}]}}"#, page1.join(","));
    let body2 = format!(r#"{{"total_count":101,"items":[{}]}}"#, page2.join(","));
    let server = FixtureServer::start(vec![
        Route::new("/search/repositories", CannedResponse::json(200, &body2)).with_query("page=2"),
        Route::new("/search/repositories", CannedResponse::json(200, &body1)).with_query("page=1"),
    ]);
    let all = list_repositories(
        &SearchCriteria {
            max_results: 1000,
            ..criteria
        },
        &fast(&server),
    )
    .unwrap();
    assert_eq!(all.len(), 101);
    assert_eq!(all.last().unwrap().full_name, "p/last");
    assert_eq!(server.requests().len(), 2);
}

#[test]
fn search_retries_server_errors_then_fails_with_status() {
    let server = FixtureServer::start(vec![
        Route::new("/search/repositories", CannedResponse::json(502, "{}")).times(2),
        Route::new(
            "/search/repositories",
            CannedResponse::json(200, &search_page(&[])),
        ),
    ]);
    let criteria = SearchCriteria {
        query: "x".into(),
        min_stars: 0,
        language: None,
        max_results: 5,
    };
    assert!(list_repositories(&criteria, &fast(&server))
        .unwrap()
        .is_empty());
    assert_eq!(server.requests().len(), 3);

    let server = FixtureServer::start(vec![Route::new(
        "/search/repositories",
        CannedResponse::json(500, "{}"),
    )]);
    match list_repositories(&criteria, &fast(&server)) {
        Err(IngestError::Network {
            status: Some(500), ..
        }) => {}
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(server.requests().len(), 4);
}

#[test]
fn search_malformed_body_is_format_error() {
    let server = FixtureServer::start(vec![Route::new(
        "/search/repositories",
        CannedResponse::json(200, "{not json"),
    )]);
    let criteria = SearchCriteria {
        query: "x".into(),
        min_stars: 0,
        language: None,
        max_results: 5,
    };
    assert!(matches!(
        list_repositories(&criteria, &fast(&server)),
        Err(IngestError::Format(_))
    ));
}

#[test]
fn fetch_writes_files_and_records_missing() {
    let server = FixtureServer::start(vec![Route::new(
        "/repos/octo/demo",
        CannedResponse::json(200, &repo_json("octo/demo", 77, Some("Java"))),
    )]);
    let tmp = tempfile::tempdir().unwrap();
    let client = fast(&server);

    let report = fetch_repo_metadata(&[], tmp.path(), &client, false).unwrap();
    assert!(report.written.is_empty() && !report.is_partial_failure());

    let names = vec!["octo/demo".to_string(), "octo/gone".to_string()];
    let report = fetch_repo_metadata(&names, tmp.path(), &client, false).unwrap();
    assert_eq!(report.written, vec![tmp.path().join("octo__demo.json")]);
    assert_eq!(report.failed.len(), 1);
    assert_eq!(report.failed[0].0, "octo/gone");
    assert!(report.is_partial_failure());
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("octo__demo.json")).unwrap())
            .unwrap();
    assert_eq!(v["stargazers_count"], 77);
    assert_eq!(v["default_branch"], "main");

    let again = fetch_repo_metadata(&names[..1], tmp.path(), &client, false).unwrap();
    assert_eq!(again.skipped, vec!["octo/demo"]);
    let forced = fetch_repo_metadata(&names[..1], tmp.path(), &client, true).unwrap();
    assert_eq!(forced.written.len(), 1);
}

#[test]
fn rate_limit_carries_reset_time() {
    let server = FixtureServer::start(vec![Route::new(
        "/repos/octo/demo",
        CannedResponse::json(403, r#"{"message":"API rate limit exceeded"}"#)
            .header("X-RateLimit-Remaining", "0")
            .header("X-RateLimit-Reset", "1700000000"),
    )]);
    let tmp = tempfile::tempdir().unwrap();
    let err =
        fetch_repo_metadata(&["octo/demo".into()], tmp.path(), &fast(&server), false).unwrap_err();
    match &err {
        IngestError::RateLimited { reset } => assert_eq!(*reset, 1_700_000_000),
        other => panic!("unexpected {other:?}"),
    }
    assert!(err.to_string().contains("2023-11-14T22:13:20"), "{err}");
    assert_eq!(server.requests().len(), 1, "rate limits are not retried");
}
