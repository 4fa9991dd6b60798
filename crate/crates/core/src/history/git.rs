//! Read-only access to a git repository through the `git` executable.
//! The exact invocations are listed in `docs/vcs-backend.md`.

use std::path::Path;
use std::process::Command;
use std::sync::Mutex;

use super::{Commit, HistoryError};

static GIT: Mutex<()> = Mutex::new(());

fn git(dir: &Path, args: &[&str]) -> Result<Vec<u8>, HistoryError> {
    let _guard = GIT.lock().unwrap_or_else(|e| e.into_inner());
    let out = Command::new("git")
        .arg("-C")
        .arg(dir)
        .args(["-c", "core.quotepath=off"])
        .args(args)
        .output()
        .map_err(|e| HistoryError::Vcs(format!("cannot run git: {e}")))?;
    if !out.status.success() {
        return Err(HistoryError::Vcs(String::from_utf8_lossy(&out.stderr).trim().to_string()));
    }
    Ok(out.stdout)
}

fn text(bytes: Vec<u8>) -> Result<String, HistoryError> {
    String::from_utf8(bytes).map_err(|_| HistoryError::Vcs("git produced non-UTF-8 output".into()))
}

/// Commits reachable from any ref, the HEAD id, and `(short ref name, id)` pairs.
pub(super) fn load(dir: &Path) -> Result<(Vec<Commit>, String, Vec<(String, String)>), HistoryError> {
    let no_repo = || HistoryError::NoRepository(dir.display().to_string());
    if !dir.is_dir() {
        return Err(no_repo());
    }
    let head = git(dir, &["rev-parse", "--verify", "-q", "HEAD"]).map_err(|_| no_repo())?;
    let head = text(head)?.trim().to_string();

    let log = text(git(dir, &["log", "--all", "--format=%H%x00%an%x00%P%x00%B%x1e"])?)?;
    let mut commits = Vec::new();
    for record in log.split('\x1e') {
        let record = record.trim_start_matches('\n');
        if record.is_empty() {
            continue;
        }
        let mut f = record.splitn(4, '\0');
        let (Some(id), Some(author), Some(parents), Some(message)) = (f.next(), f.next(), f.next(), f.next()) else {
            return Err(HistoryError::Vcs(format!("unexpected log record `{record}`")));
        };
        commits.push(Commit {
            id: id.to_string(),
            author: author.to_string(),
            message: message.trim_end().to_string(),
            parent: parents.split_whitespace().next().map(str::to_string),
        });
    }

    let refs = text(git(
        dir,
        &["for-each-ref", "--format=%(refname:short)%00%(objectname)", "refs/heads", "refs/remotes", "refs/tags"],
    )?)?;
    let refs = refs
        .lines()
        .filter_map(|l| l.split_once('\0'))
        .map(|(name, id)| (name.to_string(), id.to_string()))
        .collect();
    Ok((commits, head, refs))
}

pub(super) fn files_at(dir: &Path, id: &str) -> Result<Vec<(String, String)>, HistoryError> {
    let listing = text(git(dir, &["ls-tree", "-r", "-z", "--name-only", id])?)?;
    let mut out = Vec::new();
    for path in listing.split('\0').filter(|p| !p.is_empty()) {
        let blob = text(git(dir, &["show", &format!("{id}:{path}")])?)?;
        out.push((path.to_string(), blob));
    }
    out.sort();
    Ok(out)
}
