//! Thin wrapper over the system `git` executable. Every invocation is
//! non-interactive: credential prompts fail instead of blocking.

use std::ffi::OsStr;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::process::{Command, Output, Stdio};

use crate::error::IngestError;

pub(crate) fn command(dir: Option<&Path>) -> Command {
    let mut cmd = Command::new("git");
    if let Some(d) = dir {
        cmd.arg("-C").arg(d);
    }
    cmd.env("GIT_TERMINAL_PROMPT", "0")
        .env("GIT_ASKPASS", "true")
        .env("SSH_ASKPASS", "true")
        .env("GCM_INTERACTIVE", "never")
        .env("GIT_SSH_COMMAND", "ssh -o BatchMode=yes")
        .stdin(Stdio::null());
    cmd
}

fn stderr_excerpt(out: &Output) -> String {
    let text = String::from_utf8_lossy(&out.stderr);
    let trimmed = text.trim();
    let excerpt: String = trimmed.lines().take(4).collect::<Vec<_>>().join(" | ");
    if excerpt.is_empty() {
        format!("git exited with {}", out.status)
    } else {
        excerpt
    }
}

/// Runs git and returns stdout, or the stderr excerpt on failure.
pub(crate) fn run<I, S>(dir: Option<&Path>, args: I) -> Result<Vec<u8>, String>
where
    I: IntoIterator<Item = S>,
    S: AsRef<OsStr>,
{
    let out = command(dir)
        .args(args)
        .stderr(Stdio::piped())
        .stdout(Stdio::piped())
        .output()
        .map_err(|e| format!("cannot run git: {e}"))?;
    if out.status.success() {
        Ok(out.stdout)
    } else {
        Err(stderr_excerpt(&out))
    }
}

/// Feeds `input` to a long-running git command on a separate thread while
/// the caller consumes stdout, so large outputs cannot deadlock the pipe.
pub(crate) fn run_streaming<F>(
    dir: &Path,
    args: &[&str],
    input: Vec<u8>,
    mut consume: F,
) -> Result<(), IngestError>
where
    F: FnMut(&mut BufReader<std::process::ChildStdout>) -> Result<(), IngestError>,
{
    let mut child = command(Some(dir))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| IngestError::Git(format!("cannot run git: {e}")))?;
    let mut stdin = child.stdin.take().expect("piped stdin");
    let writer = std::thread::spawn(move || {
        let _ = stdin.write_all(&input);
    });
    let mut stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
    let result = consume(&mut stdout);
    // Drain whatever the consumer left so git can exit.
    let mut rest = Vec::new();
    let _ = stdout.read_to_end(&mut rest);
    let _ = writer.join();
    let mut err = String::new();
    if let Some(mut e) = child.stderr.take() {
        let _ = e.read_to_string(&mut err);
    }
    let status = child
        .wait()
        .map_err(|e| IngestError::Git(format!("waiting for git: {e}")))?;
    result?;
    if !status.success() {
        return Err(IngestError::Git(format!(
            "git {} failed: {}",
            args.join(" "),
            err.trim()
        )));
    }
    Ok(())
}

pub(crate) fn read_line(reader: &mut impl BufRead) -> Result<Option<String>, IngestError> {
    let mut line = String::new();
    let n = reader
        .read_line(&mut line)
        .map_err(|e| IngestError::Git(format!("reading git output: {e}")))?;
    if n == 0 {
        return Ok(None);
    }
    if line.ends_with('\n') {
        line.pop();
    }
    Ok(Some(line))
}
