use std::collections::BTreeSet;

use regex::Regex;

use super::{flag, Flags};
use crate::codemodel::build_call_graph;
use crate::engine::{Call, Context, Output, QueryError};
use crate::history::{commit_tuples, issues_referenced, map_changes_to_nodes, Commit, History, HistoryError};
use crate::minilang::{KindFilter, Node, NodeId, NodeKind};
use crate::mutation::{apply_insertions, arg_printing_statements};
use crate::tuple::{Tuple, TupleSet, Value};

pub(super) fn regex(pattern: &str) -> Result<Regex, QueryError> {
    Regex::new(pattern).map_err(|e| QueryError::BadRegex { pattern: pattern.to_string(), message: e.to_string() })
}

fn kind_filter(name: &str) -> Result<KindFilter, QueryError> {
    KindFilter::parse(name).ok_or_else(|| QueryError::UnknownKind(name.to_string()))
}

fn focus_node<'c>(ctx: &'c Context) -> Result<Option<&'c Node>, QueryError> {
    match &ctx.focus {
        Some(id) => ctx.program.node(id).map(Some).ok_or_else(|| QueryError::UnknownNode(id.to_string())),
        None => Ok(None),
    }
}

/// `ast [-type KIND] [-topLevel] [-global] [-name REGEX]`
pub(super) fn ast(call: Call<'_>, ctx: &mut Context) -> Result<Output, QueryError> {
    let f = Flags::parse(call.args, &[flag("type", 1), flag("topLevel", 0), flag("global", 0), flag("name", 1)], 0)?;
    let filter = f.value("type").map(kind_filter).transpose()?.unwrap_or(KindFilter::Any);
    let name = f.value("name").map(regex).transpose()?;
    let mut warnings = Vec::new();
    let scope = if f.has("global") {
        None
    } else {
        let focus = focus_node(ctx)?;
        if focus.is_none() {
            warnings.push("no focus; searching the whole program".to_string());
        }
        focus
    };
    let program = &ctx.program;
    let top_level = |n: &Node| {
        n.kind.is_statement()
            && program
                .parent(&n.id)
                .is_some_and(|b| b.kind == NodeKind::Block && program.parent(&b.id).is_some_and(|m| m.kind == NodeKind::Method))
    };
    let tuples = program
        .nodes_of_kind(filter, scope)
        .into_iter()
        .filter(|n| !f.has("topLevel") || top_level(n))
        .filter(|n| name.as_ref().map_or(true, |re| n.name.as_deref().is_some_and(|s| re.is_match(s))))
        .map(|n| Tuple::node(&n.id))
        .collect();
    Ok(Output { tuples, plan: None, warnings })
}

/// `callgraph [-global] [-nodes]`
pub(super) fn callgraph(call: Call<'_>, ctx: &mut Context) -> Result<Output, QueryError> {
    let f = Flags::parse(call.args, &[flag("global", 0), flag("nodes", 0)], 0)?;
    let root = if f.has("global") {
        None
    } else {
        let focus = focus_node(ctx)?.ok_or(QueryError::NoMethodContext)?;
        let method = ctx.program.enclosing(&focus.id, |n| n.kind == NodeKind::Method).ok_or(QueryError::NoMethodContext)?;
        Some(method.id.clone())
    };
    let graph = build_call_graph(&ctx.program, root.as_ref()).map_err(|_| QueryError::NoMethodContext)?;
    let tuples = if f.has("nodes") { graph.node_tuples() } else { graph.to_tuples() };
    let warnings = graph.unresolved.iter().map(|u| u.to_string()).collect();
    Ok(Output { tuples, plan: None, warnings })
}

fn history(ctx: &Context) -> Result<&History, QueryError> {
    ctx.history.as_ref().ok_or_else(|| HistoryError::NoRepository("(none configured)".into()).into())
}

/// First-parent commits after `older` up to and including `newer`, newest first.
fn commits_between<'h>(h: &'h History, older: &Commit, newer: &'h Commit) -> Result<Vec<&'h Commit>, QueryError> {
    let mut out = Vec::new();
    let mut cur = Some(newer);
    while let Some(c) = cur {
        if c.id == older.id {
            return Ok(out);
        }
        out.push(c);
        cur = h.parent_of(c);
    }
    Err(QueryError::BadArgument(format!("{} is not a first-parent ancestor of {}", older.id, newer.id)))
}

/// `changes [-c N | -between OLD NEW] [-nodes | -intermediate] [-type KIND]`
///
/// Every commit in the span is diffed against its parent and the changed
/// lines are mapped onto that commit's own snapshot. Node ids are stable
/// paths, so results are kept when the id still exists in the current program.
pub(super) fn changes(call: Call<'_>, ctx: &mut Context) -> Result<Output, QueryError> {
    let f = Flags::parse(
        call.args,
        &[flag("c", 1), flag("between", 2), flag("nodes", 0), flag("intermediate", 0), flag("type", 1)],
        0,
    )?;
    f.exclusive("nodes", "intermediate")?;
    f.exclusive("c", "between")?;
    let h = history(ctx)?;
    let commits = match f.values("between") {
        Some([old, new]) => commits_between(h, h.resolve_ref(old)?, h.resolve_ref(new)?)?,
        _ => {
            let n = match f.value("c") {
                Some(v) => v.parse::<usize>().map_err(|_| QueryError::BadArgument(format!("-c expects a count, got `{v}`")))?,
                None => 5,
            };
            h.last_commits(n)
        }
    };
    let input = call.input();
    let granularity = match f.value("type") {
        Some(k) => kind_filter(k)?,
        None if input.is_some() => KindFilter::Any,
        None => KindFilter::Kind(NodeKind::Method),
    };
    let wanted: Option<BTreeSet<&NodeId>> = input.map(|ts| ts.iter().filter_map(Tuple::first_node).collect());

    let mut tuples = TupleSet::new();
    let mut warnings = Vec::new();
    for c in &commits {
        let records = h.commit_changes(c)?;
        if records.is_empty() {
            continue;
        }
        let snapshot = match h.program_at(c) {
            Ok(p) => p,
            Err(e) => {
                warnings.push(format!("skipping commit {}: {e}", c.id));
                continue;
            }
        };
        for t in map_changes_to_nodes(&snapshot, &records, granularity) {
            let node = t.get("ast").and_then(Value::as_node).expect("change tuples carry ast");
            if ctx.program.node(node).is_none() {
                continue;
            }
            if wanted.as_ref().is_some_and(|w| !w.contains(node)) {
                continue;
            }
            tuples.insert(if f.has("nodes") { Tuple::node(node) } else { t });
        }
    }
    if f.has("intermediate") {
        tuples.extend(commit_tuples(commits.iter().copied()));
    }
    Ok(Output { tuples, plan: None, warnings })
}

/// `issues`: every issue, or with input the issues referenced by the
/// `message` texts of the input tuples.
pub(super) fn issues(call: Call<'_>, ctx: &mut Context) -> Result<Output, QueryError> {
    Flags::parse(call.args, &[], 0)?;
    let tracker = ctx.issues.as_ref().ok_or(QueryError::NoIssueTracker)?;
    let mut out = Output::default();
    match call.input() {
        None => out.tuples.extend(tracker.iter().map(|i| i.to_tuple())),
        Some(input) => {
            for t in input {
                let Some(msg) = t.get("message").and_then(Value::as_text) else { continue };
                for n in issues_referenced(msg) {
                    match tracker.lookup(n) {
                        Ok(issue) => {
                            out.tuples.insert(issue.to_tuple());
                        }
                        Err(e) => out.warnings.push(e.to_string()),
                    }
                }
            }
        }
    }
    Ok(out)
}

fn parse_cell(cell: &str) -> Value {
    if let Ok(i) = cell.parse::<i64>() {
        return Value::Int(i);
    }
    match cell.parse::<f64>() {
        Ok(r) if r.is_finite() && !cell.trim().is_empty() => Value::real(r).expect("finite"),
        _ => Value::text(cell),
    }
}

/// `importCSV PATH [-tag TAG] [-node COLUMN]`
pub(super) fn import_csv(call: Call<'_>, ctx: &mut Context) -> Result<Output, QueryError> {
    let f = Flags::parse(call.args, &[flag("tag", 1), flag("node", 1)], 1)?;
    let path = f.positional.first().ok_or_else(|| QueryError::BadArgument("importCSV needs a file path".into()))?;
    let full = ctx.resolve_path(path);
    let file = std::fs::File::open(&full).map_err(|_| QueryError::FileNotFound(full.display().to_string()))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| QueryError::Csv(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(QueryError::EmptyHeader(full.display().to_string()));
    }
    let node_col = match f.value("node") {
        Some(c) => Some(
            header.iter().position(|h| h == c).ok_or_else(|| QueryError::BadArgument(format!("no column `{c}`")))?,
        ),
        None => None,
    };
    let mut out = Output::default();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| QueryError::Csv(e.to_string()))?;
        let mut elements = Vec::with_capacity(header.len());
        let mut skip = false;
        for (i, (name, cell)) in header.iter().zip(record.iter()).enumerate() {
            let value = if Some(i) == node_col {
                match NodeId::parse(cell.trim()).filter(|id| ctx.program.node(id).is_some()) {
                    Some(id) => Value::Node(id),
                    None => {
                        out.warnings.push(format!("row {}: no method `{}`", row + 2, cell.trim()));
                        skip = true;
                        break;
                    }
                }
            } else {
                parse_cell(cell.trim())
            };
            elements.push((name.clone(), value));
        }
        if skip {
            continue;
        }
        let t = Tuple::new(f.value("tag"), elements).map_err(|e| QueryError::Csv(e.to_string()))?;
        out.tuples.insert(t);
    }
    Ok(out)
}

/// `insertArgPrinting`: prepends `print("m"); print("a", a); ...` to every input method.
pub(super) fn insert_arg_printing(call: Call<'_>, ctx: &mut Context) -> Result<Output, QueryError> {
    Flags::parse(call.args, &[], 0)?;
    let Some(input) = call.input() else { return Ok(Output::default()) };
    let mut methods: Vec<NodeId> = Vec::new();
    for t in input {
        let id = t.first_node().ok_or_else(|| QueryError::NotAMethodNode(t.to_string()))?;
        match ctx.program.node(id) {
            Some(n) if n.kind == NodeKind::Method => {
                if !methods.contains(id) {
                    methods.push(id.clone());
                }
            }
            _ => return Err(QueryError::NotAMethodNode(id.to_string())),
        }
    }
    let edits = methods
        .iter()
        .map(|id| (id.clone(), arg_printing_statements(ctx.program.node(id).expect("checked above"))))
        .collect();
    apply_insertions(ctx, edits)?;
    Ok(Output::tuples(methods.iter().map(Tuple::node).collect()))
}
