use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{anyhow, bail, Context as _};
use codeq::builtins;
use codeq::engine::{execute, Context, EngineError, Registry};
use codeq::history::{History, IssueTracker};
use codeq::minilang::{NodeId, Program};
use codeq::prompt::{parse_prompt, to_network, AliasTable, PromptError};

use crate::render::{render, Format};

/// Where a session finds its inputs.
#[derive(Debug, Clone, Default)]
pub struct Options {
    pub corpus: PathBuf,
    pub repo: Option<PathBuf>,
    pub scripts: Option<PathBuf>,
    pub issues: Option<PathBuf>,
    /// Directory holding the `aliases` file.
    pub config: Option<PathBuf>,
    pub at: Option<String>,
    pub format: Format,
    pub color: bool,
    pub timeout: Option<Duration>,
}

/// How a command failed; decides the exit status.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, unreadable inputs or an unusable output format.
    Usage(anyhow::Error),
    /// The query text or its execution failed.
    Query(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Query(_) => 1,
            Failure::Usage(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(e) | Failure::Query(e) => write!(f, "{e:#}"),
        }
    }
}

/// Rendered result of one query line.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Outcome {
    pub output: String,
    pub warnings: Vec<String>,
}

pub struct Session {
    pub ctx: Context,
    pub registry: Registry,
    pub aliases: AliasTable,
    pub format: Format,
    pub color: bool,
    opts: Options,
}

fn load_program(dir: &Path) -> anyhow::Result<Program> {
    Program::load_dir(dir).with_context(|| format!("loading corpus {}", dir.display()))
}

impl Session {
    pub fn open(opts: Options) -> anyhow::Result<Session> {
        let mut ctx = Context::new(load_program(&opts.corpus)?);
        ctx.corpus_dir = Some(opts.corpus.clone());
        ctx.work_dir = std::env::current_dir().unwrap_or_else(|_| PathBuf::from("."));
        if let Some(t) = opts.timeout {
            ctx.script_timeout = t;
        }
        let mut registry = builtins::registry();
        registry.set_script_dir(opts.scripts.clone());
        let aliases = match &opts.config {
            Some(dir) => AliasTable::load(&dir.join("aliases"))?,
            None => AliasTable::new(),
        };
        let mut s = Session { ctx, registry, aliases, format: opts.format, color: opts.color, opts };
        s.load_sources()?;
        if let Some(at) = s.opts.at.clone() {
            s.set_focus(&at)?;
        }
        Ok(s)
    }

    fn load_sources(&mut self) -> anyhow::Result<()> {
        self.ctx.history = match &self.opts.repo {
            Some(dir) => Some(History::open(dir).with_context(|| format!("opening history {}", dir.display()))?),
            None => None,
        };
        self.ctx.issues = match &self.opts.issues {
            Some(p) => Some(IssueTracker::load(p).with_context(|| format!("loading issues {}", p.display()))?),
            None => None,
        };
        Ok(())
    }

    /// Scripts that lose to a built-in of the same name.
    pub fn startup_warnings(&self) -> Vec<String> {
        self.registry.shadowed_scripts()
    }

    /// `FILE:LINE:COL` (innermost node there) or a node id.
    pub fn set_focus(&mut self, spec: &str) -> anyhow::Result<()> {
        let id = resolve_at(&self.ctx.program, &self.opts.corpus, spec)?;
        self.ctx.focus = Some(id);
        Ok(())
    }

    pub fn clear_focus(&mut self) {
        self.ctx.focus = None;
    }

    /// Rereads corpus, history and issues. A focus that no longer resolves is dropped.
    pub fn reload(&mut self) -> anyhow::Result<Vec<String>> {
        self.ctx.program = load_program(&self.opts.corpus)?;
        self.load_sources()?;
        let mut warnings = Vec::new();
        if let Some(f) = &self.ctx.focus {
            if self.ctx.program.node(f).is_none() {
                warnings.push(format!("focus {f} no longer exists; cleared"));
                self.ctx.focus = None;
            }
        }
        Ok(warnings)
    }

    pub fn alias_path(&self) -> Option<PathBuf> {
        self.opts.config.as_ref().map(|d| d.join("aliases"))
    }

    /// Defines and persists `name`.
    pub fn define_alias(&mut self, name: &str, body: &str) -> anyhow::Result<()> {
        self.aliases.define(name, body)?;
        self.save_aliases()
    }

    pub fn remove_alias(&mut self, name: &str) -> anyhow::Result<()> {
        if !self.aliases.remove(name) {
            bail!("no alias `{name}`");
        }
        self.save_aliases()
    }

    fn save_aliases(&self) -> anyhow::Result<()> {
        if let Some(p) = self.alias_path() {
            self.aliases.save(&p)?;
        }
        Ok(())
    }

    /// Parses, expands, executes and renders one prompt.
    pub fn run(&mut self, text: &str) -> Result<Outcome, Failure> {
        let parsed = parse_prompt(text).map_err(|e| Failure::Query(prompt_error(&e, text)))?;
        let expanded = self.aliases.expand(&parsed).map_err(|e| Failure::Query(e.into()))?;
        expanded.validate(|n| self.registry.contains(n)).map_err(|e| Failure::Query(e.into()))?;
        let exec = execute(&to_network(&expanded), &self.registry, &mut self.ctx).map_err(|e| match e {
            EngineError::Query { query, source, warnings } => {
                let mut msg = format!("{query}: {source}");
                for w in warnings {
                    msg = format!("{msg}\nwarning: {w}");
                }
                Failure::Query(anyhow!(msg))
            }
            other => Failure::Query(other.into()),
        })?;
        let mut output = String::new();
        for plan in &exec.plans {
            let text = render(plan, self.format, &self.ctx.program, self.color).map_err(|e| Failure::Usage(e.into()))?;
            output.push_str(&text);
        }
        Ok(Outcome { output, warnings: exec.warnings })
    }
}

fn prompt_error(e: &PromptError, text: &str) -> anyhow::Error {
    match e.caret(text) {
        Some(c) => anyhow!("{e}\n{c}"),
        None => anyhow!("{e}"),
    }
}

/// Resolves a focus spec against `program`.
pub fn resolve_at(program: &Program, corpus: &Path, spec: &str) -> anyhow::Result<NodeId> {
    let mut parts = spec.rsplitn(3, ':');
    let (col, line, file) = (parts.next(), parts.next(), parts.next());
    if let (Some(col), Some(line), Some(file)) = (col, line, file) {
        if let (Ok(line), Ok(col)) = (line.parse::<usize>(), col.parse::<usize>()) {
            let rel = corpus_relative(program, corpus, file).ok_or_else(|| anyhow!("`{file}` is not a corpus file"))?;
            let node = program.node_at(&rel, line, col).ok_or_else(|| anyhow!("no node at {rel}:{line}:{col}"))?;
            return Ok(node.id.clone());
        }
    }
    let id = NodeId::parse(spec).ok_or_else(|| anyhow!("`{spec}` is neither FILE:LINE:COL nor a node id"))?;
    program.resolve(&id)?;
    Ok(id)
}

fn corpus_relative(program: &Program, corpus: &Path, file: &str) -> Option<String> {
    if program.file(file).is_some() {
        return Some(file.to_string());
    }
    let abs = std::fs::canonicalize(file).ok()?;
    let root = std::fs::canonicalize(corpus).ok()?;
    let rel = abs.strip_prefix(root).ok()?;
    let rel = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
    program.file(&rel).map(|_| rel)
}
