//! The query prompt language.
//!
//! ```text
//! pipeline := stage ('|' stage)*
//! stage    := NAME arg* | group
//! group    := 'minus'? '{' pipeline (';' pipeline)+ '}'
//! ```
//!
//! Arguments are uninterpreted words; a word holding whitespace or one of
//! `| ; { } "` must be double-quoted (`\"` and `\\` escape inside quotes).

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::engine::{MergeKind, QueryNetwork};
use crate::tuple::is_identifier;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("syntax error at column {}: {message}", column + 1)]
    Syntax { column: usize, message: String },
    #[error("unknown query `{0}`")]
    UnknownQuery(String),
    #[error("alias `{0}` refers to itself")]
    SelfReferentialAlias(String),
    #[error("alias `{0}` is already defined")]
    DuplicateAlias(String),
    #[error("alias `{0}` takes no arguments")]
    AliasArguments(String),
    #[error("invalid alias name `{0}`")]
    BadAliasName(String),
    #[error("alias file: {0}")]
    Store(String),
}

impl PromptError {
    /// The prompt with a caret under the error column, for syntax errors.
    pub fn caret(&self, text: &str) -> Option<String> {
        match self {
            PromptError::Syntax { column, .. } => Some(format!("{text}\n{}^", " ".repeat(*column))),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupKind {
    Join,
    Minus,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Stage {
    Invocation { name: String, args: Vec<String> },
    Group { kind: GroupKind, branches: Vec<Pipeline> },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pipeline {
    pub stages: Vec<Stage>,
}

impl Stage {
    pub fn call(name: &str, args: &[&str]) -> Stage {
        Stage::Invocation { name: name.to_string(), args: args.iter().map(|a| a.to_string()).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word { text: String, quoted: bool },
    Pipe,
    Semi,
    Open,
    Close,
}

fn is_special(c: char) -> bool {
    matches!(c, '|' | ';' | '{' | '}' | '"')
}

/// Tokens with their starting character column.
fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, PromptError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '|' => out.push((start, Tok::Pipe)),
            ';' => out.push((start, Tok::Semi)),
            '{' => out.push((start, Tok::Open)),
            '}' => out.push((start, Tok::Close)),
            '"' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => return Err(PromptError::Syntax { column: start, message: "unterminated quote".into() }),
                        Some('"') => break,
                        Some('\\') if matches!(chars.get(i + 1), Some('"' | '\\')) => {
                            s.push(chars[i + 1]);
                            i += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                out.push((start, Tok::Word { text: s, quoted: true }));
            }
            _ => {
                let mut s = String::new();
                while i < chars.len() && !chars[i].is_whitespace() && !is_special(chars[i]) {
                    s.push(chars[i]);
                    i += 1;
                }
                out.push((start, Tok::Word { text: s, quoted: false }));
                continue;
            }
        }
        i += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn column(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(c, _)| *c)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, PromptError> {
        Err(PromptError::Syntax { column: self.column(), message: message.into() })
    }

    fn describe(&self) -> String {
        match self.peek() {
            None => "end of input".into(),
            Some(Tok::Pipe) => "`|`".into(),
            Some(Tok::Semi) => "`;`".into(),
            Some(Tok::Open) => "`{`".into(),
            Some(Tok::Close) => "`}`".into(),
            Some(Tok::Word { text, .. }) => format!("`{text}`"),
        }
    }

    fn pipeline(&mut self) -> Result<Pipeline, PromptError> {
        let mut stages = vec![self.stage()?];
        while self.peek() == Some(&Tok::Pipe) {
            self.pos += 1;
            stages.push(self.stage()?);
        }
        Ok(Pipeline { stages })
    }

    fn stage(&mut self) -> Result<Stage, PromptError> {
        match self.peek().cloned() {
            Some(Tok::Open) => self.group(GroupKind::Join),
            Some(Tok::Word { text, quoted: false })
                if text == "minus" && matches!(self.toks.get(self.pos + 1), Some((_, Tok::Open))) =>
            {
                self.pos += 1;
                self.group(GroupKind::Minus)
            }
            Some(Tok::Word { text, quoted: false }) if is_identifier(&text) => {
                self.pos += 1;
                let mut args = Vec::new();
                while let Some(Tok::Word { text, .. }) = self.peek() {
                    args.push(text.clone());
                    self.pos += 1;
                }
                if self.peek() == Some(&Tok::Open) {
                    return self.error("`{` must be quoted inside arguments");
                }
                Ok(Stage::Invocation { name: text, args })
            }
            _ => self.error(format!("expected query name or `{{`, found {}", self.describe())),
        }
    }

    fn group(&mut self, kind: GroupKind) -> Result<Stage, PromptError> {
        let open = self.column();
        self.pos += 1;
        let mut branches = vec![self.pipeline()?];
        while self.peek() == Some(&Tok::Semi) {
            self.pos += 1;
            branches.push(self.pipeline()?);
        }
        if self.peek() != Some(&Tok::Close) {
            return self.error(format!("expected `;` or `}}`, found {}", self.describe()));
        }
        if branches.len() < 2 {
            return Err(PromptError::Syntax { column: open, message: "a group needs at least two branches".into() });
        }
        self.pos += 1;
        Ok(Stage::Group { kind, branches })
    }
}

pub fn parse_prompt(text: &str) -> Result<Pipeline, PromptError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0, end: text.chars().count() };
    if p.peek().is_none() {
        return p.error("empty prompt");
    }
    let pipeline = p.pipeline()?;
    if p.peek().is_some() {
        return p.error(format!("unexpected {}", p.describe()));
    }
    Ok(pipeline)
}

fn write_arg(f: &mut fmt::Formatter<'_>, arg: &str) -> fmt::Result {
    if !arg.is_empty() && !arg.chars().any(|c| c.is_whitespace() || is_special(c)) {
        return f.write_str(arg);
    }
    f.write_str("\"")?;
    for c in arg.chars() {
        if c == '"' || c == '\\' {
            f.write_str("\\")?;
        }
        write!(f, "{c}")?;
    }
    f.write_str("\"")
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stage::Invocation { name, args } => {
                f.write_str(name)?;
                for a in args {
                    f.write_str(" ")?;
                    write_arg(f, a)?;
                }
                Ok(())
            }
            Stage::Group { kind, branches } => {
                if *kind == GroupKind::Minus {
                    f.write_str("minus ")?;
                }
                f.write_str("{ ")?;
                for (i, b) in branches.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ; ")?;
                    }
                    write!(f, "{b}")?;
                }
                f.write_str(" }")
            }
        }
    }
}

/// Canonical prompt text.
impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.stages.iter().enumerate() {
            if i > 0 {
                f.write_str(" | ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

pub fn serialize_prompt(p: &Pipeline) -> String {
    p.to_string()
}

impl Pipeline {
    /// Query names used anywhere in the prompt, in order of appearance.
    pub fn query_names(&self) -> Vec<&str> {
        let mut out = Vec::new();
        for s in &self.stages {
            match s {
                Stage::Invocation { name, .. } => out.push(name.as_str()),
                Stage::Group { branches, .. } => branches.iter().for_each(|b| out.extend(b.query_names())),
            }
        }
        out
    }

    pub fn validate(&self, known: impl Fn(&str) -> bool) -> Result<(), PromptError> {
        match self.query_names().into_iter().find(|n| !known(n)) {
            Some(n) => Err(PromptError::UnknownQuery(n.to_string())),
            None => Ok(()),
        }
    }
}

/// Builds the query network for a prompt (aliases must already be expanded).
///
/// Each group branch receives the upstream output. A joining group that ends
/// the prompt gets no merge node: its branches stay separate sinks.
pub fn to_network(p: &Pipeline) -> QueryNetwork {
    let mut net = QueryNetwork::new();
    lower(&mut net, p, None, true);
    net
}

fn lower(net: &mut QueryNetwork, p: &Pipeline, mut upstream: Option<usize>, top: bool) -> Option<usize> {
    for (i, stage) in p.stages.iter().enumerate() {
        let last = i + 1 == p.stages.len();
        match stage {
            Stage::Invocation { name, args } => {
                let node = net.add_query(name, args);
                if let Some(u) = upstream {
                    net.connect(u, node, 0);
                }
                upstream = Some(node);
            }
            Stage::Group { kind, branches } => {
                let outs: Vec<Option<usize>> = branches.iter().map(|b| lower(net, b, upstream, false)).collect();
                if top && last && *kind == GroupKind::Join {
                    return None;
                }
                let merge = net.add_merge(match kind {
                    GroupKind::Join => MergeKind::Join,
                    GroupKind::Minus => MergeKind::Subtract,
                });
                for (port, out) in outs.into_iter().enumerate() {
                    net.connect(out.expect("inner pipelines always end in a node"), merge, port);
                }
                upstream = Some(merge);
            }
        }
    }
    upstream
}

/// Named prompts usable as stages.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AliasTable {
    entries: BTreeMap<String, Pipeline>,
}

impl AliasTable {
    pub fn new() -> AliasTable {
        AliasTable::default()
    }

    pub fn get(&self, name: &str) -> Option<&Pipeline> {
        self.entries.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Pipeline)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn define(&mut self, name: &str, body: &str) -> Result<(), PromptError> {
        if !is_identifier(name) || name == "minus" {
            return Err(PromptError::BadAliasName(name.to_string()));
        }
        if self.entries.contains_key(name) {
            return Err(PromptError::DuplicateAlias(name.to_string()));
        }
        let body = parse_prompt(body)?;
        self.entries.insert(name.to_string(), body);
        if let Err(e) = self.check_acyclic() {
            self.entries.remove(name);
            return Err(e);
        }
        Ok(())
    }

    pub fn remove(&mut self, name: &str) -> bool {
        self.entries.remove(name).is_some()
    }

    fn check_acyclic(&self) -> Result<(), PromptError> {
        for (name, body) in &self.entries {
            self.expand_inner(body, &mut vec![name.clone()])?;
        }
        Ok(())
    }

    /// Splices alias bodies in place of stages that name them, transitively.
    pub fn expand(&self, p: &Pipeline) -> Result<Pipeline, PromptError> {
        self.expand_inner(p, &mut Vec::new())
    }

    fn expand_inner(&self, p: &Pipeline, active: &mut Vec<String>) -> Result<Pipeline, PromptError> {
        let mut stages = Vec::new();
        for s in &p.stages {
            match s {
                Stage::Invocation { name, args } => match self.entries.get(name) {
                    Some(body) => {
                        if active.contains(name) {
                            return Err(PromptError::SelfReferentialAlias(active[0].clone()));
                        }
                        if !args.is_empty() {
                            return Err(PromptError::AliasArguments(name.clone()));
                        }
                        active.push(name.clone());
                        let inner = self.expand_inner(body, active)?;
                        active.pop();
                        stages.extend(inner.stages);
                    }
                    None => stages.push(s.clone()),
                },
                Stage::Group { kind, branches } => {
                    let branches = branches.iter().map(|b| self.expand_inner(b, active)).collect::<Result<_, _>>()?;
                    stages.push(Stage::Group { kind: *kind, branches });
                }
            }
        }
        Ok(Pipeline { stages })
    }

    /// Reads `name = "prompt text"` lines. A missing file is an empty table.
    pub fn load(path: &Path) -> Result<AliasTable, PromptError> {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(AliasTable::new()),
            Err(e) => return Err(PromptError::Store(format!("{}: {e}", path.display()))),
        };
        let raw: BTreeMap<String, String> =
            toml::from_str(&text).map_err(|e| PromptError::Store(format!("{}: {e}", path.display())))?;
        let mut table = AliasTable::new();
        for (name, body) in raw {
            if !is_identifier(&name) {
                return Err(PromptError::BadAliasName(name));
            }
            table.entries.insert(name, parse_prompt(&body)?);
        }
        table.check_acyclic()?;
        Ok(table)
    }

    pub fn save(&self, path: &Path) -> Result<(), PromptError> {
        let raw: BTreeMap<&str, String> = self.entries.iter().map(|(k, v)| (k.as_str(), v.to_string())).collect();
        let text = toml::to_string(&raw).map_err(|e| PromptError::Store(e.to_string()))?;
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| PromptError::Store(format!("{}: {e}", dir.display())))?;
        }
        std::fs::write(path, text).map_err(|e| PromptError::Store(format!("{}: {e}", path.display())))
    }
}
