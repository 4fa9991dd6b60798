//! Query networks and their sequential execution.
//!
//! A [`QueryNetwork`] is a DAG whose nodes are query invocations or merge
//! nodes (union / subtraction). [`execute`] runs every node once in
//! topological order, hands each output to all consumers, and picks a
//! [`RenderPlan`] for terminal outputs nobody visualized explicitly.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use thiserror::Error;

use crate::history::{History, HistoryError, IssueTracker};
use crate::minilang::{NodeId, Program};
use crate::scripthost::{self, ScriptError};
use crate::tuple::{Tuple, TupleSet};

/// Failure reported by a single query.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QueryError {
    #[error("unknown flag `{0}`")]
    UnknownFlag(String),
    #[error("flag `{0}` needs a value")]
    MissingFlagValue(String),
    #[error("flags {0} and {1} cannot be combined")]
    FlagConflict(String, String),
    #[error("bad argument: {0}")]
    BadArgument(String),
    #[error("unknown node kind `{0}`")]
    UnknownKind(String),
    #[error("bad regular expression `{pattern}`: {message}")]
    BadRegex { pattern: String, message: String },
    #[error("no method context; focus a method or pass -global")]
    NoMethodContext,
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("no selector element `{0}` in any tuple of its tag")]
    MissingSelector(String),
    #[error("tuple is not a relation: {0}")]
    NotARelation(String),
    #[error("no start node; pass -self or -from")]
    MissingStart,
    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("CSV file has no header: {0}")]
    EmptyHeader(String),
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("tuple has no numeric element: {0}")]
    NoNumericElement(String),
    #[error("tuple has no node element: {0}")]
    NoNodeElement(String),
    #[error("not a method: {0}")]
    NotAMethodNode(String),
    #[error("write failed: {0}")]
    WriteFailure(String),
    #[error("no issue tracker loaded")]
    NoIssueTracker,
    #[error(transparent)]
    History(#[from] HistoryError),
    #[error(transparent)]
    Script(#[from] ScriptError),
    #[error("{0}")]
    Other(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("unknown query `{0}`")]
    UnknownQuery(String),
    #[error("query `{0}` is already registered")]
    DuplicateQueryName(String),
    #[error("query network has a cycle")]
    Cycle,
    #[error("bad connection into node {node}: {message}")]
    BadPort { node: usize, message: String },
    #[error("{query}: {source}")]
    Query {
        query: String,
        source: QueryError,
        /// Warnings collected before the failure.
        warnings: Vec<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryKind {
    Resource,
    Operator,
    Visualization,
}

/// How a visualization is drawn.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Renderer {
    Messages,
    Arrows,
    Highlight { color: Option<String> },
    Table,
    Heatmap,
}

impl Renderer {
    pub fn name(&self) -> &'static str {
        match self {
            Renderer::Messages => "messages",
            Renderer::Arrows => "arrows",
            Renderer::Highlight { .. } => "highlight",
            Renderer::Table => "table",
            Renderer::Heatmap => "heatmap",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderPlan {
    pub renderer: Renderer,
    pub payload: TupleSet,
}

/// Chooses a renderer from the shape of `ts`.
pub fn auto_select(ts: &TupleSet) -> RenderPlan {
    let is_single_node = |t: &Tuple| t.elements().len() == 1 && t.first_node().is_some();
    let renderer = if ts.iter().any(|t| t.tag() == "message") {
        Renderer::Messages
    } else if !ts.is_empty() && ts.iter().all(|t| t.node_refs().count() == 2) {
        Renderer::Arrows
    } else if !ts.is_empty() && ts.iter().all(is_single_node) {
        Renderer::Highlight { color: None }
    } else {
        Renderer::Table
    };
    RenderPlan { renderer, payload: ts.clone() }
}

/// Everything a query may read or change besides its inputs.
#[derive(Debug, Clone)]
pub struct Context {
    pub program: Program,
    /// Where the program's files live; `None` keeps mutations in memory.
    pub corpus_dir: Option<PathBuf>,
    pub focus: Option<NodeId>,
    pub history: Option<History>,
    pub issues: Option<IssueTracker>,
    /// Base for relative file arguments.
    pub work_dir: PathBuf,
    pub script_timeout: Duration,
}

impl Context {
    pub fn new(program: Program) -> Context {
        Context {
            program,
            corpus_dir: None,
            focus: None,
            history: None,
            issues: None,
            work_dir: PathBuf::from("."),
            script_timeout: Duration::from_secs(30),
        }
    }

    pub fn resolve_path(&self, path: &str) -> PathBuf {
        let p = PathBuf::from(path);
        if p.is_absolute() {
            p
        } else {
            self.work_dir.join(p)
        }
    }
}

/// One invocation as seen by the query implementation.
#[derive(Debug, Clone, Copy)]
pub struct Call<'a> {
    pub name: &'a str,
    pub args: &'a [String],
    /// One slot per declared input; `None` when nothing is connected.
    pub inputs: &'a [Option<TupleSet>],
}

impl<'a> Call<'a> {
    pub fn input(&self) -> Option<&'a TupleSet> {
        self.inputs.first().and_then(Option::as_ref)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Output {
    pub tuples: TupleSet,
    pub plan: Option<RenderPlan>,
    pub warnings: Vec<String>,
}

impl Output {
    pub fn tuples(tuples: TupleSet) -> Output {
        Output { tuples, ..Output::default() }
    }

    pub fn render(renderer: Renderer, payload: TupleSet) -> Output {
        Output { plan: Some(RenderPlan { renderer, payload }), ..Output::default() }
    }

    pub fn warn(mut self, w: impl Into<String>) -> Output {
        self.warnings.push(w.into());
        self
    }
}

pub trait Query: Send + Sync {
    fn run(&self, call: Call<'_>, ctx: &mut Context) -> Result<Output, QueryError>;
}

impl<F> Query for F
where
    F: Fn(Call<'_>, &mut Context) -> Result<Output, QueryError> + Send + Sync,
{
    fn run(&self, call: Call<'_>, ctx: &mut Context) -> Result<Output, QueryError> {
        self(call, ctx)
    }
}

#[derive(Clone)]
pub struct Registration {
    pub name: String,
    pub kind: QueryKind,
    /// Input slots the query accepts.
    pub arity: usize,
    /// Leading slots that must be connected.
    pub required: usize,
    pub query: Arc<dyn Query>,
}

impl std::fmt::Debug for Registration {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Registration")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("arity", &self.arity)
            .finish()
    }
}

/// Native queries plus scripts found lazily in a directory.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    native: BTreeMap<String, Registration>,
    script_dir: Option<PathBuf>,
}

impl Registry {
    pub fn new() -> Registry {
        Registry::default()
    }

    pub fn register(
        &mut self,
        name: &str,
        arity: usize,
        kind: QueryKind,
        query: impl Query + 'static,
    ) -> Result<(), EngineError> {
        self.register_arc(Registration { name: name.to_string(), kind, arity, required: 0, query: Arc::new(query) })
    }

    pub fn register_arc(&mut self, reg: Registration) -> Result<(), EngineError> {
        if self.native.contains_key(&reg.name) {
            return Err(EngineError::DuplicateQueryName(reg.name));
        }
        self.native.insert(reg.name.clone(), reg);
        Ok(())
    }

    pub fn set_script_dir(&mut self, dir: Option<PathBuf>) {
        self.script_dir = dir;
    }

    pub fn script_dir(&self) -> Option<&PathBuf> {
        self.script_dir.as_ref()
    }

    pub fn native_names(&self) -> impl Iterator<Item = &str> {
        self.native.keys().map(String::as_str)
    }

    /// Native queries win; otherwise the script directory is scanned.
    pub fn lookup(&self, name: &str) -> Option<Registration> {
        if let Some(r) = self.native.get(name) {
            return Some(r.clone());
        }
        let dir = self.script_dir.as_ref()?;
        let script = scripthost::discover(dir).0.into_iter().find(|s| s.name == name)?;
        Some(Registration {
            name: name.to_string(),
            kind: QueryKind::Operator,
            arity: 1,
            required: 0,
            query: Arc::new(script),
        })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.lookup(name).is_some()
    }

    /// Scripts whose names collide with native queries.
    pub fn shadowed_scripts(&self) -> Vec<String> {
        match &self.script_dir {
            Some(dir) => scripthost::discover(dir)
                .0
                .into_iter()
                .filter(|s| self.native.contains_key(&s.name))
                .map(|s| format!("script `{}` is shadowed by the built-in query", s.name))
                .collect(),
            None => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MergeKind {
    Join,
    Subtract,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NetNode {
    Query { name: String, args: Vec<String> },
    Merge(MergeKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub port: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QueryNetwork {
    pub nodes: Vec<NetNode>,
    pub edges: Vec<Edge>,
}

impl QueryNetwork {
    pub fn new() -> QueryNetwork {
        QueryNetwork::default()
    }

    pub fn add_query(&mut self, name: &str, args: &[String]) -> usize {
        self.nodes.push(NetNode::Query { name: name.to_string(), args: args.to_vec() });
        self.nodes.len() - 1
    }

    pub fn add_merge(&mut self, kind: MergeKind) -> usize {
        self.nodes.push(NetNode::Merge(kind));
        self.nodes.len() - 1
    }

    pub fn connect(&mut self, from: usize, to: usize, port: usize) {
        self.edges.push(Edge { from, to, port });
    }

    pub fn query_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, NetNode::Query { .. })).count()
    }

    pub fn merges(&self) -> impl Iterator<Item = (usize, MergeKind)> + '_ {
        self.nodes.iter().enumerate().filter_map(|(i, n)| match n {
            NetNode::Merge(k) => Some((i, *k)),
            _ => None,
        })
    }

    /// Nodes whose output feeds nothing.
    pub fn sinks(&self) -> Vec<usize> {
        let fed: BTreeSet<usize> = self.edges.iter().map(|e| e.from).collect();
        (0..self.nodes.len()).filter(|i| !fed.contains(i)).collect()
    }

    /// Kahn's algorithm, smallest ready index first.
    pub fn topological_order(&self) -> Result<Vec<usize>, EngineError> {
        let n = self.nodes.len();
        let mut indegree = vec![0usize; n];
        for e in &self.edges {
            if e.from >= n || e.to >= n {
                return Err(EngineError::BadPort { node: e.to, message: "edge endpoint out of range".into() });
            }
            indegree[e.to] += 1;
        }
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = ready.pop_first() {
            order.push(i);
            for e in self.edges.iter().filter(|e| e.from == i) {
                indegree[e.to] -= 1;
                if indegree[e.to] == 0 {
                    ready.insert(e.to);
                }
            }
        }
        if order.len() == n {
            Ok(order)
        } else {
            Err(EngineError::Cycle)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sink {
    pub node: usize,
    pub output: TupleSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub sinks: Vec<Sink>,
    /// Explicit and automatic render plans in execution order.
    pub plans: Vec<RenderPlan>,
    pub warnings: Vec<String>,
}

fn validate(net: &QueryNetwork, registry: &Registry) -> Result<(Vec<usize>, Vec<Option<Registration>>), EngineError> {
    let order = net.topological_order()?;
    let mut regs = Vec::with_capacity(net.nodes.len());
    for node in &net.nodes {
        regs.push(match node {
            NetNode::Query { name, .. } => {
                Some(registry.lookup(name).ok_or_else(|| EngineError::UnknownQuery(name.clone()))?)
            }
            NetNode::Merge(_) => None,
        });
    }
    for (i, node) in net.nodes.iter().enumerate() {
        let ports: Vec<usize> = net.edges.iter().filter(|e| e.to == i).map(|e| e.port).collect();
        let distinct: BTreeSet<usize> = ports.iter().copied().collect();
        let bad = |message: String| EngineError::BadPort { node: i, message };
        if distinct.len() != ports.len() {
            return Err(bad("two edges share one input port".into()));
        }
        match (node, &regs[i]) {
            (NetNode::Query { name, .. }, Some(reg)) => {
                if let Some(p) = distinct.iter().find(|&&p| p >= reg.arity) {
                    return Err(bad(format!("`{name}` takes {} input(s), got port {p}", reg.arity)));
                }
                if let Some(p) = (0..reg.required).find(|p| !distinct.contains(p)) {
                    return Err(bad(format!("`{name}` input {p} is required")));
                }
            }
            _ => {
                if distinct.is_empty() || distinct.iter().copied().ne(0..distinct.len()) {
                    return Err(bad("merge inputs must use ports 0..n".into()));
                }
            }
        }
    }
    Ok((order, regs))
}

/// Runs `net` once. Any query failure aborts the whole run.
pub fn execute(net: &QueryNetwork, registry: &Registry, ctx: &mut Context) -> Result<Execution, EngineError> {
    let (order, regs) = validate(net, registry)?;
    let mut outputs: Vec<Option<TupleSet>> = vec![None; net.nodes.len()];
    let mut plans = Vec::new();
    let mut warnings = Vec::new();
    let sinks = net.sinks();

    for i in order {
        let mut incoming: Vec<&Edge> = net.edges.iter().filter(|e| e.to == i).collect();
        incoming.sort_by_key(|e| e.port);
        let result = match &net.nodes[i] {
            NetNode::Merge(kind) => {
                let ins: Vec<&TupleSet> =
                    incoming.iter().map(|e| outputs[e.from].as_ref().expect("upstream ran first")).collect();
                match kind {
                    MergeKind::Join => ins.iter().fold(TupleSet::new(), |acc, s| acc.union(s)),
                    MergeKind::Subtract => ins[0].subtract(ins[1..].iter().copied()),
                }
            }
            NetNode::Query { name, args } => {
                let reg = regs[i].as_ref().expect("validated");
                let mut inputs: Vec<Option<TupleSet>> = vec![None; reg.arity];
                for e in &incoming {
                    let upstream = outputs[e.from].clone();
                    assert!(upstream.is_some(), "input of `{name}` read before it was produced");
                    inputs[e.port] = upstream;
                }
                let call = Call { name, args, inputs: &inputs };
                let out = reg.query.run(call, ctx).map_err(|source| EngineError::Query {
                    query: name.clone(),
                    source,
                    warnings: warnings.clone(),
                })?;
                warnings.extend(out.warnings.into_iter().map(|w| format!("{name}: {w}")));
                if let Some(plan) = out.plan {
                    plans.push(plan);
                } else if sinks.contains(&i) && reg.kind != QueryKind::Visualization {
                    plans.push(auto_select(&out.tuples));
                }
                outputs[i] = Some(out.tuples);
                continue;
            }
        };
        if sinks.contains(&i) {
            plans.push(auto_select(&result));
        }
        outputs[i] = Some(result);
    }

    let sinks = sinks
        .into_iter()
        .map(|node| Sink { node, output: outputs[node].take().unwrap_or_default() })
        .collect();
    Ok(Execution { sinks, plans, warnings })
}

#[cfg(test)]
mod tests;
