//! Version history and issue tracker providers.
//!
//! Two backends expose the same commit graph:
//!
//! * **fixture**: a directory holding `log.txt` with one
//!   `id|author|message|parent` line per commit (oldest first), a numbered
//!   snapshot folder per line (`1/`, `2/`, ...), and an optional `refs.txt`
//!   with `name|id` lines. The last log line is `HEAD`.
//! * **git**: a real repository read through the `git` executable.
//!
//! Change records are computed the same way for both: each file of the newer
//! snapshot is line-diffed against the older one.

pub mod diff;
mod git;
mod issues;

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::minilang::{KindFilter, Node, Program};
use crate::tuple::{Tuple, TupleSet, Value};

pub use issues::{issues_referenced, Issue, IssueTracker};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HistoryError {
    #[error("no repository at {0}")]
    NoRepository(String),
    #[error("unknown revision `{0}`")]
    UnknownRef(String),
    #[error("ambiguous commit prefix `{0}`")]
    AmbiguousPrefix(String),
    #[error("unknown issue #{0}")]
    UnknownIssue(u64),
    #[error("malformed {file}: {message}")]
    Format { file: String, message: String },
    #[error("{0}")]
    Io(String),
    #[error("git failed: {0}")]
    Vcs(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Commit {
    pub id: String,
    pub author: String,
    pub message: String,
    pub parent: Option<String>,
}

impl Commit {
    pub fn to_tuple(&self) -> Tuple {
        Tuple::new(
            Some("commit"),
            [
                ("id", Value::text(&self.id)),
                ("author", Value::text(&self.author)),
                ("message", Value::text(&self.message)),
            ],
        )
        .expect("static shape")
    }
}

/// `commit:(id, author, message)` per commit.
pub fn commit_tuples<'a>(commits: impl IntoIterator<Item = &'a Commit>) -> TupleSet {
    commits.into_iter().map(Commit::to_tuple).collect()
}

/// Lines changed in one file, numbered against the newer contents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChangeRecord {
    pub commit: String,
    pub file: String,
    /// 1-based inclusive, sorted, non-overlapping.
    pub ranges: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
enum Backend {
    Fixture { dir: PathBuf, folders: HashMap<String, usize> },
    Git { dir: PathBuf },
}

#[derive(Debug, Clone)]
pub struct History {
    backend: Backend,
    commits: HashMap<String, Commit>,
    /// First-parent chain from HEAD, newest first.
    head_chain: Vec<String>,
    refs: Vec<(String, String)>,
}

impl History {
    /// Opens `dir` as a fixture history if it has `log.txt`, else as a git repository.
    pub fn open(dir: &Path) -> Result<History, HistoryError> {
        if dir.join("log.txt").is_file() {
            History::open_fixture(dir)
        } else {
            History::open_git(dir)
        }
    }

    pub fn open_fixture(dir: &Path) -> Result<History, HistoryError> {
        let log_path = dir.join("log.txt");
        let log = std::fs::read_to_string(&log_path)
            .map_err(|_| HistoryError::NoRepository(dir.display().to_string()))?;
        let bad = |message: String| HistoryError::Format { file: log_path.display().to_string(), message };
        let mut commits = HashMap::new();
        let mut folders = HashMap::new();
        let mut last = None;
        for (i, line) in log.lines().filter(|l| !l.trim().is_empty()).enumerate() {
            let (rest, parent) = line.rsplit_once('|').ok_or_else(|| bad(format!("line {}: too few fields", i + 1)))?;
            let mut fields = rest.splitn(3, '|');
            let (Some(id), Some(author), Some(message)) = (fields.next(), fields.next(), fields.next()) else {
                return Err(bad(format!("line {}: too few fields", i + 1)));
            };
            if id.is_empty() || commits.contains_key(id) {
                return Err(bad(format!("line {}: missing or duplicate id", i + 1)));
            }
            let parent = (!parent.is_empty()).then(|| parent.to_string());
            if let Some(p) = &parent {
                if !commits.contains_key(p) {
                    return Err(bad(format!("line {}: parent `{p}` is not an earlier commit", i + 1)));
                }
            }
            commits.insert(
                id.to_string(),
                Commit { id: id.into(), author: author.into(), message: message.into(), parent },
            );
            folders.insert(id.to_string(), i + 1);
            last = Some(id.to_string());
        }
        let Some(head) = last else {
            return Err(HistoryError::NoRepository(dir.display().to_string()));
        };
        let mut refs = Vec::new();
        if let Ok(text) = std::fs::read_to_string(dir.join("refs.txt")) {
            for line in text.lines().filter(|l| !l.trim().is_empty()) {
                let (name, id) = line.split_once('|').ok_or_else(|| HistoryError::Format {
                    file: "refs.txt".into(),
                    message: format!("expected `name|id`, got `{line}`"),
                })?;
                refs.push((name.to_string(), id.to_string()));
            }
        }
        let backend = Backend::Fixture { dir: dir.to_path_buf(), folders };
        Ok(History::assemble(backend, commits, &head, refs))
    }

    pub fn open_git(dir: &Path) -> Result<History, HistoryError> {
        let (commits, head, refs) = git::load(dir)?;
        let commits = commits.into_iter().map(|c| (c.id.clone(), c)).collect();
        Ok(History::assemble(Backend::Git { dir: dir.to_path_buf() }, commits, &head, refs))
    }

    fn assemble(
        backend: Backend,
        commits: HashMap<String, Commit>,
        head: &str,
        refs: Vec<(String, String)>,
    ) -> History {
        let mut head_chain = Vec::new();
        let mut cur = Some(head.to_string());
        while let Some(id) = cur {
            cur = commits.get(&id).and_then(|c| c.parent.clone());
            head_chain.push(id);
        }
        History { backend, commits, head_chain, refs }
    }

    pub fn is_git(&self) -> bool {
        matches!(self.backend, Backend::Git { .. })
    }

    pub fn commit(&self, id: &str) -> Option<&Commit> {
        self.commits.get(id)
    }

    pub fn parent_of(&self, c: &Commit) -> Option<&Commit> {
        c.parent.as_deref().and_then(|p| self.commits.get(p))
    }

    /// Up to `n` most recent commits on HEAD's first-parent chain, newest first.
    pub fn last_commits(&self, n: usize) -> Vec<&Commit> {
        self.head_chain.iter().take(n).filter_map(|id| self.commits.get(id)).collect()
    }

    /// Resolves `HEAD`, a ref name, a full id or unique id prefix, each
    /// optionally followed by `~k` (k first parents back).
    pub fn resolve_ref(&self, spec: &str) -> Result<&Commit, HistoryError> {
        let unknown = || HistoryError::UnknownRef(spec.to_string());
        let (base, back) = match spec.rsplit_once('~') {
            Some((b, k)) => (b, if k.is_empty() { 1 } else { k.parse::<usize>().map_err(|_| unknown())? }),
            None => (spec, 0),
        };
        let mut commit = if base == "HEAD" {
            self.commits.get(self.head_chain.first().ok_or_else(unknown)?)
        } else if let Some((_, id)) = self.refs.iter().find(|(name, _)| name == base) {
            self.commits.get(id)
        } else if let Some(c) = self.commits.get(base) {
            Some(c)
        } else if !base.is_empty() && base.bytes().all(|b| b.is_ascii_hexdigit()) {
            let mut hits = self.commits.values().filter(|c| c.id.starts_with(base));
            match (hits.next(), hits.next()) {
                (Some(c), None) => Some(c),
                (Some(_), Some(_)) => return Err(HistoryError::AmbiguousPrefix(base.to_string())),
                _ => None,
            }
        } else {
            None
        }
        .ok_or_else(unknown)?;
        for _ in 0..back {
            commit = self.parent_of(commit).ok_or_else(unknown)?;
        }
        Ok(commit)
    }

    /// `(path, text)` for every file in the commit's snapshot, sorted by path.
    pub fn files_at(&self, commit: &Commit) -> Result<Vec<(String, String)>, HistoryError> {
        match &self.backend {
            Backend::Fixture { dir, folders } => {
                let folder = dir.join(folders[&commit.id].to_string());
                let mut out = Vec::new();
                read_tree(&folder, &folder, &mut out).map_err(|e| HistoryError::Io(e.to_string()))?;
                out.sort();
                Ok(out)
            }
            Backend::Git { dir } => git::files_at(dir, &commit.id),
        }
    }

    /// Program made of the snapshot's `*.mini` files.
    pub fn program_at(&self, commit: &Commit) -> Result<Program, HistoryError> {
        let sources: Vec<(String, String)> =
            self.files_at(commit)?.into_iter().filter(|(p, _)| p.ends_with(".mini")).collect();
        Program::parse(&sources).map_err(|e| HistoryError::Format {
            file: format!("{} at {}", e.file, commit.id),
            message: e.to_string(),
        })
    }

    /// Line changes from `older` (or an empty tree) to `newer`, labelled with `newer`'s id.
    pub fn changes_between(&self, older: Option<&Commit>, newer: &Commit) -> Result<Vec<ChangeRecord>, HistoryError> {
        let before: HashMap<String, String> = match older {
            Some(c) => self.files_at(c)?.into_iter().collect(),
            None => HashMap::new(),
        };
        let mut out = Vec::new();
        for (path, text) in self.files_at(newer)? {
            let old = before.get(&path).map(String::as_str).unwrap_or("");
            let ranges = diff::changed_ranges(old, &text);
            if !ranges.is_empty() {
                out.push(ChangeRecord { commit: newer.id.clone(), file: path, ranges });
            }
        }
        Ok(out)
    }

    /// Changes introduced by one commit relative to its parent.
    pub fn commit_changes(&self, commit: &Commit) -> Result<Vec<ChangeRecord>, HistoryError> {
        self.changes_between(self.parent_of(commit), commit)
    }
}

fn read_tree(root: &Path, dir: &Path, out: &mut Vec<(String, String)>) -> std::io::Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            read_tree(root, &path, out)?;
        } else {
            let rel = path.strip_prefix(root).expect("below root");
            let rel = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
            out.push((rel, std::fs::read_to_string(&path)?));
        }
    }
    Ok(())
}

/// Candidates whose span overlaps any changed range of a record for their file.
pub fn changed_nodes<'p>(
    records: &[ChangeRecord],
    candidates: impl IntoIterator<Item = &'p Node>,
) -> Vec<&'p Node> {
    candidates
        .into_iter()
        .filter(|n| {
            records.iter().any(|r| {
                r.file.as_str() == &*n.span.file && r.ranges.iter().any(|&(s, e)| n.span.overlaps_lines(s, e))
            })
        })
        .collect()
}

/// `change:(id: commit, ast: node)` for every node of `granularity`
/// overlapping a changed range.
pub fn map_changes_to_nodes(program: &Program, records: &[ChangeRecord], granularity: KindFilter) -> TupleSet {
    let candidates = program.nodes_of_kind(granularity, None);
    let mut out = TupleSet::new();
    for record in records {
        for node in changed_nodes(std::slice::from_ref(record), candidates.iter().copied()) {
            out.insert(change_tuple(&record.commit, node));
        }
    }
    out
}

pub fn change_tuple(commit: &str, node: &Node) -> Tuple {
    Tuple::new(Some("change"), [("id", Value::text(commit)), ("ast", Value::node(&node.id))]).expect("static shape")
}
