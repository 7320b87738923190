//! Test-only helpers: scripted git repositories, a canned HTTP server, and
//! brute-force oracles that share no code with the implementation.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::{fs, io};

pub mod synth;

// ---------------------------------------------------------------------------
// git fixtures
// ---------------------------------------------------------------------------

/// A scratch repository with a working tree and deterministic commits.
pub struct GitRepo {
    pub path: PathBuf,
}

fn git_cmd(dir: &Path) -> Command {
    let mut cmd = Command::new("git");
    cmd.arg("-C")
        .arg(dir)
        .env("GIT_CONFIG_NOSYSTEM", "1")
        .env("GIT_CONFIG_GLOBAL", "/dev/null")
        .env("GIT_AUTHOR_NAME", "Fixture Author")
        .env("GIT_AUTHOR_EMAIL", "author@example.com")
        .env("GIT_COMMITTER_NAME", "Fixture Committer")
        .env("GIT_COMMITTER_EMAIL", "committer@example.com")
        .env("GIT_TERMINAL_PROMPT", "0");
    cmd
}

impl GitRepo {
    pub fn init(path: &Path) -> GitRepo {
        fs::create_dir_all(path).unwrap();
        let repo = GitRepo {
            path: path.to_path_buf(),
        };
        repo.git(&["-c", "init.defaultBranch=main", "init", "-q"]);
        repo.git(&["config", "commit.gpgsign", "false"]);
        repo
    }

    pub fn git(&self, args: &[&str]) -> String {
        self.git_at(args, None)
    }

    fn git_at(&self, args: &[&str], epoch: Option<i64>) -> String {
        let mut cmd = git_cmd(&self.path);
        if let Some(t) = epoch {
            let date = format!("@{t} +0000");
            cmd.env("GIT_AUTHOR_DATE", &date)
                .env("GIT_COMMITTER_DATE", &date);
        }
        let out = cmd.args(args).output().expect("run git");
        assert!(
            out.status.success(),
            "git {:?} failed: {}",
            args,
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8_lossy(&out.stdout).trim().to_string()
    }

    pub fn write(&self, rel: &str, content: &str) {
        let p = self.path.join(rel);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent).unwrap();
        }
        fs::write(p, content).unwrap();
    }

    pub fn remove(&self, rel: &str) {
        fs::remove_file(self.path.join(rel)).unwrap();
    }

    /// Stages everything and commits at `epoch` seconds; returns the hash.
    pub fn commit(&self, message: &str, epoch: i64) -> String {
        self.git(&["add", "-A"]);
        self.git_at(
            &["commit", "-q", "--allow-empty", "-m", message],
            Some(epoch),
        );
        self.head()
    }

    pub fn head(&self) -> String {
        self.git(&["rev-parse", "HEAD"])
    }

    pub fn checkout(&self, branch: &str, create: bool) {
        if create {
            self.git(&["checkout", "-q", "-b", branch]);
        } else {
            self.git(&["checkout", "-q", branch]);
        }
    }

    pub fn merge(&self, branch: &str, message: &str, epoch: i64) -> String {
        self.git_at(
            &["merge", "-q", "--no-ff", "-m", message, branch],
            Some(epoch),
        );
        self.head()
    }

    /// `git diff-tree` name-status listing of `commit` against its first
    /// parent (or the empty tree), as `(status, path)` pairs.
    pub fn first_parent_changes(&self, commit: &str) -> Vec<(char, String)> {
        let parents = self.git(&["rev-list", "--parents", "-n", "1", commit]);
        let parent = parents.split_whitespace().nth(1).map(str::to_string);
        let out = match parent {
            Some(p) => self.git(&["diff", "--name-status", "--no-renames", &p, commit]),
            None => self.git(&["show", "--name-status", "--no-renames", "--format=", commit]),
        };
        let mut v: Vec<(char, String)> = out
            .lines()
            .filter(|l| !l.is_empty())
            .map(|l| {
                let (s, p) = l.split_once('\t').unwrap();
                (s.chars().next().unwrap(), p.to_string())
            })
            .collect();
        v.sort_by(|a, b| a.1.cmp(&b.1));
        v
    }

    /// Files present in the tree of `commit`, sorted.
    pub fn tree_files(&self, commit: &str) -> Vec<String> {
        let mut v: Vec<String> = self
            .git(&["ls-tree", "-r", "--name-only", commit])
            .lines()
            .map(str::to_string)
            .collect();
        v.sort();
        v
    }
}

pub const FIXTURE_EPOCH: i64 = 1_600_000_000;

/// Three repositories with annotation usage spread across history: files
/// added, modified and deleted, an annotation removed before head,
/// annotations hidden in comments and strings, a merged feature branch.
/// Created as `root/<owner>__<name>` working repositories.
pub fn annotation_corpus(root: &Path) -> Vec<PathBuf> {
    let t = FIXTURE_EPOCH;

    let alpha = GitRepo::init(&root.join("acme__alpha"));
    alpha.write(
        "src/acme/A.java",
        "package acme;\n\nimport java.util.List;\n\n/** @author someone */\npublic class A {\n    @Deprecated\n    private int x;\n\n    @Override\n    public String toString() { return \"@NotAnAnnotation\"; }\n    // @Ignored\n}\n",
    );
    alpha.write(
        "src/acme/B.java",
        "package acme;\n\n@FunctionalInterface\ninterface B { void run(); }\n",
    );
    alpha.write("README.md", "ping @someone\n");
    alpha.commit("initial import", t);
    alpha.write(
        "src/acme/A.java",
        "package acme;\n\nimport java.util.List;\n\n/** @author someone */\npublic class A {\n    private int x;\n\n    @Override\n    public String toString() { return \"@NotAnAnnotation\"; }\n    /* @Ignored */\n}\n",
    );
    alpha.write(
        "src/acme/C.java",
        "package acme;\n\npublic final class C {\n    @SuppressWarnings(\"unchecked\")\n    static class Inner {\n        void m(@Deprecated int a, final String b) {\n            if (a > 0) { helper(b); }\n        }\n    }\n\n    @interface Marker { String value() default \"@x\"; }\n}\n",
    );
    alpha.commit("drop deprecation, add C", t + 100);
    alpha.remove("src/acme/B.java");
    alpha.commit("remove B", t + 200);

    let beta = GitRepo::init(&root.join("acme__beta"));
    beta.write(
        "Service.java",
        "import javax.inject.Inject;\n\npublic class Service {\n    @Inject\n    Repo repo;\n\n    public void run() { repo.save(\"x\"); }\n}\n",
    );
    beta.commit("service", t + 10);
    beta.checkout("feature", true);
    beta.write(
        "FeatureTest.java",
        "public class FeatureTest {\n    @Test\n    public void one() {}\n\n    @Test\n    @Disabled(\"flaky\")\n    public void two() {}\n}\n",
    );
    beta.commit("feature tests", t + 20);
    beta.checkout("main", false);
    beta.write(
        "Service.java",
        "import javax.inject.Inject;\n\npublic class Service {\n    @Inject\n    Repo repo;\n\n    @Nullable\n    public String run() { return repo.save(\"x\"); }\n}\n",
    );
    beta.commit("nullable run", t + 30);
    beta.merge("feature", "merge feature", t + 40);
    beta.write("docs/notes.txt", "@Test is used for tests\n");
    beta.commit("notes", t + 50);

    let gamma = GitRepo::init(&root.join("octo__gamma"));
    gamma.write(
        "lib/Util.java",
        "package lib;\n\npublic enum Util {\n    ONE, TWO;\n\n    @Deprecated\n    public static int twice(int v) { return v * 2; }\n}\n",
    );
    gamma.commit("util", t + 5);
    gamma.remove("lib/Util.java");
    gamma.write(
        "lib/Utils.java",
        "package lib;\n\n@Generated(\"tool\")\npublic enum Utils {\n    ONE, TWO;\n\n    @Deprecated\n    @SafeVarargs\n    public static int sum(int... v) { return 0; }\n}\n",
    );
    gamma.write("build.gradle", "apply plugin: 'java'\n");
    gamma.commit("rename util", t + 15);

    vec![alpha.path, beta.path, gamma.path]
}

/// The annotation-counting query, verbatim.
pub const ANNOTATION_QUERY: &str = r#"o: output sum[project: string] of int;

visit(input, visitor {
    before node: CodeRepository -> {
        snapshot := getsnapshot(node);
        foreach (i: int; def(snapshot[i]))
            visit(snapshot[i]);
        stop;
    }
    before mod: Modifier -> {
        if (mod.kind == ModifierKind.ANNOTATION)
            o[input.id] << 1;
    }
});
"#;

/// Bare `file://` clones of [`annotation_corpus`] under `root/clones`.
/// Returns (working repositories, clones directory).
pub fn corpus_clones(root: &Path) -> (Vec<PathBuf>, PathBuf) {
    use miner_core::ingest::{clone_repositories, full_name_for_dir, CloneTarget};
    let paths = annotation_corpus(&root.join("src"));
    let targets: Vec<CloneTarget> = paths
        .iter()
        .map(|p| CloneTarget {
            full_name: full_name_for_dir(&p.file_name().unwrap().to_string_lossy()),
            url: format!("file://{}", p.display()),
        })
        .collect();
    let dest = root.join("clones");
    let report = clone_repositories(&targets, &dest, 3).expect("clone fixtures");
    assert_eq!(report.succeeded.len(), 3, "{:?}", report.failed);
    (paths, dest)
}

/// Builds the annotation corpus into a dataset at `root/dataset`.
/// Returns (working repositories, dataset directory).
pub fn fixture_dataset(root: &Path) -> (Vec<PathBuf>, PathBuf) {
    let (paths, clones) = corpus_clones(root);
    let out = root.join("dataset");
    miner_core::ingest::build_dataset(&clones, None, &out, "fixture", 2).expect("build fixture");
    (paths, out)
}

// ---------------------------------------------------------------------------
// annotation oracle
// ---------------------------------------------------------------------------

/// Counts `@Name` annotation uses in Java text, ignoring comments, string,
/// char and text-block literals, and `@interface` declarations.
pub fn count_annotations_in_source(src: &str) -> usize {
    let b: Vec<char> = src.chars().collect();
    let mut i = 0;
    let mut count = 0;
    while i < b.len() {
        let c = b[i];
        let next = b.get(i + 1).copied();
        if c == '/' && next == Some('/') {
            while i < b.len() && b[i] != '\n' {
                i += 1;
            }
        } else if c == '/' && next == Some('*') {
            i += 2;
            while i + 1 < b.len() && !(b[i] == '*' && b[i + 1] == '/') {
                i += 1;
            }
            i += 2;
        } else if c == '"' && next == Some('"') && b.get(i + 2) == Some(&'"') {
            i += 3;
            while i + 2 < b.len() && !(b[i] == '"' && b[i + 1] == '"' && b[i + 2] == '"') {
                i += if b[i] == '\\' { 2 } else { 1 };
            }
            i += 3;
        } else if c == '"' || c == '\'' {
            i += 1;
            while i < b.len() && b[i] != c {
                i += if b[i] == '\\' { 2 } else { 1 };
            }
            i += 1;
        } else if c == '@' {
            let mut j = i + 1;
            while j < b.len() && b[j].is_whitespace() {
                j += 1;
            }
            let start = j;
            while j < b.len() && (b[j].is_alphanumeric() || b[j] == '_' || b[j] == '$') {
                j += 1;
            }
            let word: String = b[start..j].iter().collect();
            if !word.is_empty() && word != "interface" {
                count += 1;
            }
            i = j.max(i + 1);
        } else {
            i += 1;
        }
    }
    count
}

/// Sums annotation uses over every `.java` file in a checked-out tree.
pub fn count_annotations_in_tree(dir: &Path) -> usize {
    let mut total = 0;
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.file_name().is_some_and(|n| n == ".git") {
                continue;
            }
            if p.is_dir() {
                stack.push(p);
            } else if p
                .extension()
                .is_some_and(|e| e.to_string_lossy().eq_ignore_ascii_case("java"))
            {
                total += count_annotations_in_source(&fs::read_to_string(&p).unwrap());
            }
        }
    }
    total
}

// ---------------------------------------------------------------------------
// canned HTTP server
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct CannedResponse {
    pub status: u16,
    pub headers: Vec<(String, String)>,
    pub body: String,
}

impl CannedResponse {
    pub fn json(status: u16, body: &str) -> Self {
        CannedResponse {
            status,
            headers: vec![("Content-Type".into(), "application/json".into())],
            body: body.to_string(),
        }
    }

    pub fn header(mut self, k: &str, v: &str) -> Self {
        self.headers.push((k.into(), v.into()));
        self
    }
}

#[derive(Debug, Clone)]
pub struct Route {
    pub path: String,
    /// Every listed substring must occur in the raw query string.
    pub query_contains: Vec<String>,
    pub response: CannedResponse,
    /// Serve at most this many times, then fall through to later routes.
    pub times: Option<usize>,
}

impl Route {
    pub fn new(path: &str, response: CannedResponse) -> Self {
        Route {
            path: path.into(),
            query_contains: Vec::new(),
            response,
            times: None,
        }
    }

    pub fn with_query(mut self, q: &str) -> Self {
        self.query_contains.push(q.into());
        self
    }

    pub fn times(mut self, n: usize) -> Self {
        self.times = Some(n);
        self
    }
}

/// A one-connection-at-a-time HTTP/1.1 server answering from fixed routes.
/// Unmatched requests get a 404.
pub struct FixtureServer {
    pub base: String,
    requests: Arc<Mutex<Vec<RecordedRequest>>>,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

#[derive(Debug, Clone)]
pub struct RecordedRequest {
    pub target: String,
    pub authorization: Option<String>,
}

impl FixtureServer {
    pub fn start(routes: Vec<Route>) -> FixtureServer {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let requests = Arc::new(Mutex::new(Vec::new()));
        let stop = Arc::new(AtomicBool::new(false));
        let routes = Arc::new(Mutex::new(routes));
        let (req2, stop2) = (requests.clone(), stop.clone());
        let handle = thread::spawn(move || {
            for stream in listener.incoming() {
                if stop2.load(Ordering::SeqCst) {
                    break;
                }
                if let Ok(s) = stream {
                    let _ = serve(s, &routes, &req2);
                }
            }
        });
        FixtureServer {
            base: format!("http://{addr}"),
            requests,
            stop,
            handle: Some(handle),
        }
    }

    pub fn requests(&self) -> Vec<RecordedRequest> {
        self.requests.lock().unwrap().clone()
    }
}

impl Drop for FixtureServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.base.trim_start_matches("http://"));
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn reason(status: u16) -> &'static str {
    match status {
        200 => "OK",
        403 => "Forbidden",
        404 => "Not Found",
        429 => "Too Many Requests",
        500 => "Internal Server Error",
        502 => "Bad Gateway",
        _ => "Status",
    }
}

fn serve(
    stream: TcpStream,
    routes: &Mutex<Vec<Route>>,
    log: &Mutex<Vec<RecordedRequest>>,
) -> io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    let target = request_line
        .split_whitespace()
        .nth(1)
        .unwrap_or("/")
        .to_string();
    let mut authorization = None;
    let mut content_length = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 || line == "\r\n" || line == "\n" {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            let k = k.trim().to_ascii_lowercase();
            if k == "authorization" {
                authorization = Some(v.trim().to_string());
            } else if k == "content-length" {
                content_length = v.trim().parse().unwrap_or(0);
            }
        }
    }
    if content_length > 0 {
        let mut body = vec![0; content_length];
        reader.read_exact(&mut body)?;
    }
    log.lock().unwrap().push(RecordedRequest {
        target: target.clone(),
        authorization,
    });

    let (path, query) = target.split_once('?').unwrap_or((&target, ""));
    let response = {
        let mut routes = routes.lock().unwrap();
        let found = routes.iter_mut().find(|r| {
            r.path == path
                && r.query_contains.iter().all(|q| query.contains(q.as_str()))
                && r.times != Some(0)
        });
        match found {
            Some(r) => {
                if let Some(n) = r.times.as_mut() {
                    *n -= 1;
                }
                r.response.clone()
            }
            None => CannedResponse::json(404, r#"{"message":"Not Found"}"#),
        }
    };
    let mut out = stream;
    let mut head = format!(
        "HTTP/1.1 {} {}\r\n",
        response.status,
        reason(response.status)
    );
    for (k, v) in &response.headers {
        head.push_str(&format!("{k}: {v}\r\n"));
    }
    head.push_str(&format!(
        "Content-Length: {}\r\nConnection: close\r\n\r\n",
        response.body.len()
    ));
    out.write_all(head.as_bytes())?;
    out.write_all(response.body.as_bytes())?;
    out.flush()
}

/// A repository object in the shape the GitHub API returns.
pub fn repo_json(full_name: &str, stars: u64, language: Option<&str>) -> String {
    let lang = language
        .map(|l| format!("\"{l}\""))
        .unwrap_or_else(|| "null".into());
    format!(
        r#"{{"id":1,"full_name":"{full_name}","html_url":"https://github.com/{full_name}","clone_url":"https://github.com/{full_name}.git","stargazers_count":{stars},"fork":false,"default_branch":"main","language":{lang},"created_at":"2019-05-01T12:00:00Z","owner":{{"login":"{owner}"}}}}"#,
        owner = full_name.split('/').next().unwrap_or("")
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scanner_ignores_comments_strings_and_interface() {
        let src = "// @A\n/* @B */\n@C class X { String s = \"@D\"; char c = '@'; @interface E {} @ F int y; }";
        assert_eq!(count_annotations_in_source(src), 2);
        assert_eq!(
            count_annotations_in_source("String t = \"\"\"\n@X\n\"\"\"; @Y int z;"),
            1
        );
    }
}
