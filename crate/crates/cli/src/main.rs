use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use miner_core::dataset::{read_dataset, validate_dataset};
use miner_core::engine::{execute, Registry};
use miner_core::export::to_csv;
use miner_core::ingest::github::DEFAULT_API_BASE;
use miner_core::ingest::{
    build_dataset, clone_repositories, fetch_repo_metadata, list_repositories, parse_repo_line,
    targets_from_list, targets_from_metadata_dir, write_metadata_files, GithubClient,
    SearchCriteria,
};
use miner_core::pool::available_workers;
use miner_core::query::compile;
use miner_core::IngestError;

const EXIT_USAGE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_PARTIAL: u8 = 3;
const EXIT_NETWORK: u8 = 4;

#[derive(Parser)]
#[command(
    name = "miner",
    version,
    about = "Build repository datasets and run queries over them"
)]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Api {
    /// GitHub API base URL
    #[arg(long, default_value = DEFAULT_API_BASE)]
    api_base: String,
    /// API token; defaults to $GITHUB_TOKEN
    #[arg(long, env = "GITHUB_TOKEN", hide_env_values = true)]
    token: Option<String>,
}

impl Api {
    fn client(&self) -> GithubClient {
        GithubClient::new(&self.api_base, self.token.clone())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Search repositories and save their metadata
    Search {
        #[arg(long)]
        query: String,
        #[arg(long, default_value_t = 0)]
        min_stars: u64,
        #[arg(long)]
        language: Option<String>,
        #[arg(long, default_value_t = 100)]
        max: usize,
        #[command(flatten)]
        api: Api,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fetch metadata for named repositories
    FetchMetadata {
        /// File with one repository per line
        #[arg(long, conflicts_with = "names")]
        repos: Option<PathBuf>,
        /// owner/name pairs
        #[arg(required_unless_present = "repos")]
        names: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        api: Api,
        /// Refetch files that already exist
        #[arg(long)]
        force: bool,
    },
    /// Clone repositories into a directory
    Clone {
        #[arg(long, required_unless_present = "repos", conflicts_with = "repos")]
        metadata: Option<PathBuf>,
        #[arg(long)]
        repos: Option<PathBuf>,
        #[arg(long)]
        dest: PathBuf,
        #[arg(long, default_value_t = available_workers())]
        jobs: usize,
    },
    /// Build a dataset from cloned repositories
    Build {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        metadata: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        name: String,
        #[arg(long, default_value_t = available_workers())]
        jobs: usize,
    },
    /// Print a dataset summary
    Info { dataset: PathBuf },
    /// Check a dataset for consistency
    Validate { dataset: PathBuf },
    /// Run a query over a dataset
    Run {
        query: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = available_workers())]
        workers: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Where to write per-project errors; defaults to <out>.errors
        #[arg(long)]
        errors: Option<PathBuf>,
    },
    /// Convert a result file to CSV
    Csv {
        result: PathBuf,
        #[arg(long)]
        header: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    fn partial(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_PARTIAL,
            message: message.into(),
        }
    }
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        let code = match e {
            IngestError::Network { .. } | IngestError::RateLimited { .. } => EXIT_NETWORK,
            _ => EXIT_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn write_output(path: Option<&Path>, text: &str) -> CmdResult {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::input(format!("{}: {e}", p.display()))),
        None => io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::input(format!("stdout: {e}"))),
    }
}

fn check_jobs(n: usize, flag: &str) -> CmdResult {
    if n == 0 {
        return Err(Failure {
            code: EXIT_USAGE,
            message: format!("--{flag} must be at least 1"),
        });
    }
    Ok(())
}

fn search(
    query: String,
    min_stars: u64,
    language: Option<String>,
    max: usize,
    api: &Api,
    out: &Path,
) -> CmdResult {
    let criteria = SearchCriteria {
        query,
        min_stars,
        language,
        max_results: max,
    };
    let found = list_repositories(&criteria, &api.client())?;
    write_metadata_files(&found, out)?;
    eprintln!("{} repositories written to {}", found.len(), out.display());
    Ok(())
}

fn fetch_metadata(
    repos: Option<&Path>,
    names: Vec<String>,
    out: &Path,
    api: &Api,
    force: bool,
) -> CmdResult {
    let names = match repos {
        Some(file) => read_text(file)?
            .lines()
            .filter_map(parse_repo_line)
            .map(|t| t.full_name)
            .collect(),
        None => names,
    };
    let report = fetch_repo_metadata(&names, out, &api.client(), force)?;
    eprintln!(
        "written={} skipped={} failed={}",
        report.written.len(),
        report.skipped.len(),
        report.failed.len()
    );
    for (name, why) in &report.failed {
        eprintln!("{name}: {why}");
    }
    if report.is_partial_failure() {
        return Err(Failure::partial(format!(
            "{} repositories failed",
            report.failed.len()
        )));
    }
    Ok(())
}

fn clone(metadata: Option<&Path>, repos: Option<&Path>, dest: &Path, jobs: usize) -> CmdResult {
    check_jobs(jobs, "jobs")?;
    let targets = match (metadata, repos) {
        (Some(dir), _) => targets_from_metadata_dir(dir)?,
        (None, Some(file)) => targets_from_list(&read_text(file)?),
        (None, None) => unreachable!("clap requires one source"),
    };
    let report = clone_repositories(&targets, dest, jobs)?;
    eprintln!(
        "cloned {}/{} repositories into {}",
        report.succeeded.len(),
        report.requested,
        dest.display()
    );
    for (name, why) in &report.failed {
        eprintln!("{name}: {why}");
    }
    if !report.failed.is_empty() {
        return Err(Failure::partial(format!(
            "{} clones failed",
            report.failed.len()
        )));
    }
    Ok(())
}

fn build(src: &Path, metadata: Option<&Path>, out: &Path, name: &str, jobs: usize) -> CmdResult {
    check_jobs(jobs, "jobs")?;
    let report = build_dataset(src, metadata, out, name, jobs)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for (repo, why) in &report.skipped {
        eprintln!("skipped {repo}: {why}");
    }
    println!("{}", report.summary());
    if !report.skipped.is_empty() {
        return Err(Failure::partial(format!(
            "{} repositories skipped",
            report.skipped.len()
        )));
    }
    Ok(())
}

fn info(dir: &Path) -> CmdResult {
    let ds = read_dataset(dir).map_err(|e| Failure::input(e.to_string()))?;
    let m = ds.manifest();
    let revisions: usize = ds
        .projects()
        .iter()
        .map(|p| p.repository.revisions.len())
        .sum();
    let files: usize = ds
        .projects()
        .iter()
        .flat_map(|p| &p.repository.revisions)
        .map(|r| r.files.len())
        .sum();
    println!("name: {}", m.name);
    println!("format_version: {}", m.format_version);
    println!("created: {}", m.created);
    println!("projects: {}", m.project_count);
    println!("revisions: {revisions}");
    println!("changed_files: {files}");
    println!("asts: {}", m.ast_count);
    Ok(())
}

fn validate(dir: &Path) -> CmdResult {
    let report = validate_dataset(dir);
    for issue in &report.issues {
        println!("{issue}");
    }
    eprintln!(
        "checked projects={} revisions={} asts={}; issues={}",
        report.projects_checked,
        report.revisions_checked,
        report.asts_checked,
        report.issues.len()
    );
    if !report.is_valid() {
        return Err(Failure::input(format!(
            "{} issues found",
            report.issues.len()
        )));
    }
    Ok(())
}

fn run(
    query: &Path,
    dataset: &Path,
    workers: usize,
    out: Option<&Path>,
    errors: Option<&Path>,
) -> CmdResult {
    check_jobs(workers, "workers")?;
    let text = read_text(query)?;
    let program = compile(&text, &Registry::with_builtins()).map_err(|errs| {
        let file = query.display().to_string();
        let lines: Vec<String> = errs.iter().map(|e| e.render(&file)).collect();
        Failure::input(lines.join("\n"))
    })?;
    let ds = read_dataset(dataset).map_err(|e| Failure::input(e.to_string()))?;
    let result = execute(&program, &ds, workers);
    write_output(out, &result.table.to_text())?;
    if result.errors.is_empty() {
        if let Some(p) = errors {
            write_output(Some(p), "")?;
        }
        return Ok(());
    }
    let report = result.errors_report();
    let errors_path = errors
        .map(Path::to_path_buf)
        .or_else(|| out.map(|o| PathBuf::from(format!("{}.errors", o.display()))));
    match &errors_path {
        Some(p) => write_output(Some(p), &report)?,
        None => eprint!("{report}"),
    }
    Err(Failure::partial(format!(
        "{} of {} projects failed{}",
        result.errors.len(),
        ds.len(),
        errors_path
            .map(|p| format!("; see {}", p.display()))
            .unwrap_or_default()
    )))
}

fn csv(result: &Path, header: bool, out: Option<&Path>) -> CmdResult {
    let text = read_text(result)?;
    let csv =
        to_csv(&text, header).map_err(|e| Failure::input(format!("{}: {e}", result.display())))?;
    write_output(out, &csv)
}

fn dispatch(cmd: Command) -> CmdResult {
    match cmd {
        Command::Search {
            query,
            min_stars,
            language,
            max,
            api,
            out,
        } => search(query, min_stars, language, max, &api, &out),
        Command::FetchMetadata {
            repos,
            names,
            out,
            api,
            force,
        } => fetch_metadata(repos.as_deref(), names, &out, &api, force),
        Command::Clone {
            metadata,
            repos,
            dest,
            jobs,
        } => clone(metadata.as_deref(), repos.as_deref(), &dest, jobs),
        Command::Build {
            src,
            metadata,
            out,
            name,
            jobs,
        } => build(&src, metadata.as_deref(), &out, &name, jobs),
        Command::Info { dataset } => info(&dataset),
        Command::Validate { dataset } => validate(&dataset),
        Command::Run {
            query,
            dataset,
            workers,
            out,
            errors,
        } => run(&query, &dataset, workers, out.as_deref(), errors.as_deref()),
        Command::Csv {
            result,
            header,
            out,
        } => csv(&result, header, out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("miner: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
