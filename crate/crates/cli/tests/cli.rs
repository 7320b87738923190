use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use miner_testkit::{
    annotation_corpus, corpus_clones, count_annotations_in_tree, fixture_dataset, repo_json,
    CannedResponse, FixtureServer, Route, ANNOTATION_QUERY,
};

fn miner(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_miner"))
        .args(args)
        .env_remove("GITHUB_TOKEN")
        .env("RUST_LOG", "warn")
        .output()
        .expect("run miner")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn usage_errors_exit_1() {
    let o = miner(&[]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("Usage") || stderr(&o).contains("Usage"));
    assert_eq!(code(&miner(&["frobnicate"])), 1);
    assert_eq!(code(&miner(&["info", "x", "--bogus"])), 1);
    assert_eq!(code(&miner(&["run"])), 1);
    assert_eq!(
        code(&miner(&["run", "q", "--dataset", "d", "--workers", "0"])),
        1
    );
    assert_eq!(
        code(&miner(&["run", "q", "--dataset", "d", "--workers", "many"])),
        1
    );
}

#[test]
fn help_exits_0_for_every_subcommand() {
    assert_eq!(code(&miner(&["--help"])), 0);
    for sub in [
        "search",
        "fetch-metadata",
        "clone",
        "build",
        "info",
        "validate",
        "run",
        "csv",
    ] {
        let o = miner(&[sub, "--help"]);
        assert_eq!(code(&o), 0, "{sub}");
        assert!(
            String::from_utf8_lossy(&o.stdout).contains("Usage"),
            "{sub}"
        );
    }
}

#[test]
fn missing_dataset_names_the_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let q = tmp.path().join("q.boa");
    fs::write(&q, ANNOTATION_QUERY).unwrap();
    let missing = tmp.path().join("missing");
    let o = miner(&["run", p(&q), "--dataset", p(&missing)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("manifest.json"), "{}", stderr(&o));
    assert_eq!(code(&miner(&["info", p(&missing)])), 2);
    assert_eq!(code(&miner(&["validate", p(&missing)])), 2);
}

#[test]
fn query_errors_are_reported_with_file_positions() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, ds) = fixture_dataset(tmp.path());
    let q = tmp.path().join("bad.boa");
    fs::write(&q, "o: output sum of;\n").unwrap();
    let o = miner(&["run", p(&q), "--dataset", p(&ds)]);
    assert_eq!(code(&o), 2);
    assert!(
        stderr(&o).contains("bad.boa:1:17: error:"),
        "{}",
        stderr(&o)
    );

    fs::write(&q, "o: output sum of int;\no << \"s\";\nx := nope();\n").unwrap();
    let o = miner(&["run", p(&q), "--dataset", p(&ds)]);
    assert_eq!(code(&o), 2);
    let err = stderr(&o);
    assert!(
        err.contains("bad.boa:2:6: error:") && err.contains("bad.boa:3:6: error:"),
        "{err}"
    );

    let o = miner(&["run", p(&tmp.path().join("nope.boa")), "--dataset", p(&ds)]);
    assert_eq!(code(&o), 2);
}

#[test]
fn build_info_validate_run_csv_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let (repos, clones) = corpus_clones(tmp.path());
    let ds = tmp.path().join("ds");
    let o = miner(&[
        "build",
        "--src",
        p(&clones),
        "--out",
        p(&ds),
        "--name",
        "fixture",
        "--jobs",
        "2",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary = String::from_utf8_lossy(&o.stdout);
    assert!(summary.starts_with("projects=3 revisions="), "{summary}");

    let o = miner(&["info", p(&ds)]);
    assert_eq!(code(&o), 0);
    let info = String::from_utf8_lossy(&o.stdout);
    assert!(
        info.contains("name: fixture") && info.contains("projects: 3"),
        "{info}"
    );

    assert_eq!(code(&miner(&["validate", p(&ds)])), 0);

    let q = tmp.path().join("q.boa");
    fs::write(&q, ANNOTATION_QUERY).unwrap();
    let out1 = tmp.path().join("r1.txt");
    let out4 = tmp.path().join("r4.txt");
    let o = miner(&[
        "run",
        p(&q),
        "--dataset",
        p(&ds),
        "--workers",
        "1",
        "--out",
        p(&out1),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(
        code(&miner(&[
            "run",
            p(&q),
            "--dataset",
            p(&ds),
            "--workers",
            "4",
            "--out",
            p(&out4)
        ])),
        0
    );
    let text = fs::read_to_string(&out1).unwrap();
    assert_eq!(fs::read(&out4).unwrap(), text.as_bytes());
    let expected: BTreeMap<String, usize> = repos
        .iter()
        .map(|r| {
            let id = r
                .file_name()
                .unwrap()
                .to_string_lossy()
                .replacen("__", "/", 1);
            (id, count_annotations_in_tree(r))
        })
        .filter(|(_, n)| *n > 0)
        .collect();
    let want: String = expected
        .iter()
        .map(|(id, n)| format!("o[{id}] = {n}\n"))
        .collect();
    assert_eq!(text, want);
    assert!(!tmp.path().join("r1.txt.errors").exists());

    let o = miner(&["run", p(&q), "--dataset", p(&ds)]);
    assert_eq!(String::from_utf8_lossy(&o.stdout), want);

    let o = miner(&["csv", p(&out1), "--header"]);
    assert_eq!(code(&o), 0);
    let csv = String::from_utf8_lossy(&o.stdout).into_owned();
    let want_csv: String = std::iter::once("output,key1,value\n".to_string())
        .chain(expected.iter().map(|(id, n)| format!("o,{id},{n}\n")))
        .collect();
    assert_eq!(csv, want_csv);
    let csv_out = tmp.path().join("r.csv");
    assert_eq!(code(&miner(&["csv", p(&out1), "--out", p(&csv_out)])), 0);
    assert_eq!(
        fs::read_to_string(&csv_out).unwrap(),
        want_csv.split_once('\n').unwrap().1
    );

    // Refuses to overwrite a dataset.
    let o = miner(&[
        "build",
        "--src",
        p(&clones),
        "--out",
        p(&ds),
        "--name",
        "again",
    ]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn validate_reports_corruption() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, ds) = fixture_dataset(tmp.path());
    let asts = ds.join("asts.jsonl");
    let text = fs::read_to_string(&asts).unwrap();
    let first_dropped: String = text.lines().skip(1).map(|l| format!("{l}\n")).collect();
    fs::write(&asts, first_dropped).unwrap();
    let o = miner(&["validate", p(&ds)]);
    assert_eq!(code(&o), 2);
    assert!(
        String::from_utf8_lossy(&o.stdout).contains("["),
        "issues are listed"
    );
}

#[test]
fn runtime_failures_exit_3_with_error_file() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, ds) = fixture_dataset(tmp.path());
    let q = tmp.path().join("q.boa");
    fs::write(
        &q,
        "o: output sum[p: string] of int;\nif (input.id == \"acme/beta\") o[input.id] << 1 / 0;\no[input.id] << 1;\n",
    )
    .unwrap();
    let out = tmp.path().join("res.txt");
    let o = miner(&["run", p(&q), "--dataset", p(&ds), "--out", p(&out)]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert_eq!(
        fs::read_to_string(&out).unwrap(),
        "o[acme/alpha] = 1\no[octo/gamma] = 1\n"
    );
    let errs = fs::read_to_string(tmp.path().join("res.txt.errors")).unwrap();
    assert_eq!(errs, "acme/beta\t2:47\tdivision by zero\n");

    let explicit = tmp.path().join("errs.tsv");
    let o = miner(&["run", p(&q), "--dataset", p(&ds), "--errors", p(&explicit)]);
    assert_eq!(code(&o), 3);
    assert_eq!(fs::read_to_string(&explicit).unwrap(), errs);
}

#[test]
fn csv_rejects_malformed_input() {
    let tmp = tempfile::tempdir().unwrap();
    let f = tmp.path().join("r.txt");
    fs::write(&f, "o[a] = 1\ngarbage\n").unwrap();
    let o = miner(&["csv", p(&f)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
    assert_eq!(code(&miner(&["csv", p(&tmp.path().join("absent"))])), 2);
}

#[test]
fn clone_from_list_and_partial_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let repos = annotation_corpus(&tmp.path().join("work"));
    let list = tmp.path().join("repos.txt");
    let mut text = String::from("# fixture repositories\n\n");
    for r in &repos {
        text.push_str(&format!("file://{}\n", r.display()));
    }
    fs::write(&list, &text).unwrap();
    let dest = tmp.path().join("clones");
    let o = miner(&[
        "clone",
        "--repos",
        p(&list),
        "--dest",
        p(&dest),
        "--jobs",
        "2",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut dirs: Vec<String> = fs::read_dir(&dest)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    dirs.sort();
    assert_eq!(dirs, ["acme__alpha", "acme__beta", "octo__gamma"]);

    text.push_str(&format!(
        "file://{}\n",
        tmp.path().join("nowhere/none").display()
    ));
    fs::write(&list, &text).unwrap();
    let o = miner(&["clone", "--repos", p(&list), "--dest", p(&dest)]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn fetch_metadata_writes_files_and_uses_token() {
    let server = FixtureServer::start(vec![
        Route::new(
            "/repos/octo/one",
            CannedResponse::json(200, &repo_json("octo/one", 17, Some("Java"))),
        ),
        Route::new(
            "/repos/octo/two",
            CannedResponse::json(200, &repo_json("octo/two", 4, None)),
        ),
    ]);
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("meta");
    let o = Command::new(env!("CARGO_BIN_EXE_miner"))
        .args([
            "fetch-metadata",
            "octo/one",
            "octo/two",
            "--out",
            p(&out),
            "--api-base",
            &server.base,
        ])
        .env("GITHUB_TOKEN", "secret-token")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for (name, stars) in [("octo__one", 17), ("octo__two", 4)] {
        let v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join(format!("{name}.json"))).unwrap())
                .unwrap();
        assert_eq!(v["stargazers_count"], stars);
    }
    let auth: Vec<Option<String>> = server
        .requests()
        .into_iter()
        .map(|r| r.authorization)
        .collect();
    assert_eq!(auth, vec![Some("Bearer secret-token".to_string()); 2]);

    // Existing files are skipped without a request; --token overrides the env.
    let o = miner(&[
        "fetch-metadata",
        "octo/one",
        "--out",
        p(&out),
        "--api-base",
        &server.base,
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(server.requests().len(), 2);
    let list = tmp.path().join("names.txt");
    fs::write(&list, "octo/one # first\n\n").unwrap();
    let o = miner(&[
        "fetch-metadata",
        "--repos",
        p(&list),
        "--out",
        p(&out),
        "--force",
        "--token",
        "flag",
        "--api-base",
        &server.base,
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(
        server.requests()[2].authorization.as_deref(),
        Some("Bearer flag")
    );
}

#[test]
fn fetch_metadata_partial_and_rate_limited() {
    let server = FixtureServer::start(vec![
        Route::new(
            "/repos/octo/one",
            CannedResponse::json(200, &repo_json("octo/one", 1, None)),
        ),
        Route::new(
            "/repos/octo/limited",
            CannedResponse::json(403, r#"{"message":"API rate limit exceeded"}"#)
                .header("X-RateLimit-Remaining", "0")
                .header("X-RateLimit-Reset", "1700000000"),
        ),
    ]);
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("meta");
    let o = miner(&[
        "fetch-metadata",
        "octo/one",
        "octo/missing",
        "--out",
        p(&out),
        "--api-base",
        &server.base,
    ]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("octo/missing"));
    assert!(out.join("octo__one.json").exists());

    let o = miner(&[
        "fetch-metadata",
        "octo/limited",
        "--out",
        p(&out),
        "--api-base",
        &server.base,
    ]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    assert!(stderr(&o).contains("2023-11-14T22:13:20"), "{}", stderr(&o));
}

#[test]
fn search_writes_metadata_directory() {
    let body = format!(
        r#"{{"total_count":2,"items":[{},{}]}}"#,
        repo_json("a/low", 5, Some("Java")),
        repo_json("b/high", 50, Some("Java"))
    );
    let server = FixtureServer::start(vec![Route::new(
        "/search/repositories",
        CannedResponse::json(200, &body),
    )
    .with_query("per_page=100")]);
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("found");
    let o = miner(&[
        "search",
        "--query",
        "topic:x",
        "--language",
        "Java",
        "--max",
        "10",
        "--api-base",
        &server.base,
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(out.join("a__low.json").exists() && out.join("b__high.json").exists());
    assert_eq!(
        code(&miner(&[
            "search",
            "--query",
            "x",
            "--max",
            "0",
            "--api-base",
            &server.base,
            "--out",
            p(&out)
        ])),
        2
    );
}
