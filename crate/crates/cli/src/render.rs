//! Turns render plans into terminal text, JSON or DOT.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use codeq::builtins::{dot_graph, heat_entries};
use codeq::engine::{RenderPlan, Renderer};
use codeq::minilang::{Node, NodeId, Program};
use codeq::scripthost::encode_tuple_set;
use codeq::tuple::{Tuple, TupleSet, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
    Dot,
}

impl Format {
    pub fn parse(s: &str) -> Option<Format> {
        match s {
            "text" => Some(Format::Text),
            "json" => Some(Format::Json),
            "dot" => Some(Format::Dot),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("format `{format}` cannot show a {renderer} result")]
pub struct FormatUnsupported {
    pub format: &'static str,
    pub renderer: &'static str,
}

pub fn render(plan: &RenderPlan, format: Format, program: &Program, color: bool) -> Result<String, FormatUnsupported> {
    match format {
        Format::Json => Ok(format!("{}\n", encode_tuple_set(&plan.payload))),
        Format::Dot => match plan.renderer {
            Renderer::Arrows => Ok(dot_graph(&plan.payload)),
            _ => Err(FormatUnsupported { format: "dot", renderer: plan.renderer.name() }),
        },
        Format::Text => Ok(match &plan.renderer {
            Renderer::Table => table(&plan.payload),
            Renderer::Arrows => arrows(&plan.payload),
            Renderer::Highlight { color: c } => highlight(&plan.payload, program, color.then(|| ansi(c.as_deref()))),
            Renderer::Messages => messages(&plan.payload, program),
            Renderer::Heatmap => heatmap(&plan.payload, program, color),
        }),
    }
}

fn ansi(name: Option<&str>) -> &'static str {
    match name.unwrap_or("yellow") {
        "red" => "\x1b[31m",
        "green" => "\x1b[32m",
        "blue" => "\x1b[34m",
        "magenta" => "\x1b[35m",
        "cyan" => "\x1b[36m",
        _ => "\x1b[33m",
    }
}

const RESET: &str = "\x1b[0m";

fn cell(v: &Value) -> String {
    match v {
        Value::Text(s) => s.replace('\n', "\\n"),
        other => other.plain(),
    }
}

/// Aligned columns: the tag, then every element name in first-seen order.
pub fn table(ts: &TupleSet) -> String {
    let rows = ts.canonical();
    let mut columns: Vec<&str> = Vec::new();
    for t in &rows {
        for n in t.names() {
            if !columns.contains(&n) {
                columns.push(n);
            }
        }
    }
    let mut grid: Vec<Vec<String>> = vec![std::iter::once("tag").chain(columns.iter().copied()).map(String::from).collect()];
    for t in &rows {
        let mut row = vec![t.tag().to_string()];
        row.extend(columns.iter().map(|c| t.get(c).map(cell).unwrap_or_default()));
        grid.push(row);
    }
    let widths: Vec<usize> =
        (0..grid[0].len()).map(|i| grid.iter().map(|r| r[i].chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for (i, row) in grid.iter().enumerate() {
        let line: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
        if i == 0 {
            let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
            out.push_str(&rule.join("  "));
            out.push('\n');
        }
    }
    out
}

/// One line per source node: `a -> b, c`, edges labeled when tags differ.
pub fn arrows(ts: &TupleSet) -> String {
    let tags: std::collections::BTreeSet<&str> = ts.iter().map(Tuple::tag).collect();
    let mut adj: BTreeMap<&NodeId, Vec<String>> = BTreeMap::new();
    for t in ts.canonical() {
        let refs: Vec<&NodeId> = t.node_refs().collect();
        if let [a, b] = refs.as_slice() {
            let target = if tags.len() > 1 { format!("{b} ({})", t.tag()) } else { b.to_string() };
            adj.entry(a).or_default().push(target);
        }
    }
    let mut out = String::new();
    for (a, targets) in adj {
        let _ = writeln!(out, "{a} -> {}", targets.join(", "));
    }
    out
}

fn location<'p>(program: &'p Program, id: &NodeId) -> Option<(&'p Node, String)> {
    let n = program.node(id)?;
    Some((n, format!("{}:{}:{}", n.span.file, n.span.start.line, n.span.start.col)))
}

/// Each node's source excerpt under a `id  file:line:col` header.
pub fn highlight(ts: &TupleSet, program: &Program, color: Option<&str>) -> String {
    let mut out = String::new();
    for t in ts.canonical() {
        let Some(id) = t.first_node() else { continue };
        let Some((node, loc)) = location(program, id) else {
            let _ = writeln!(out, "{id}  (not in the current program)");
            continue;
        };
        let _ = writeln!(out, "{id}  {loc}");
        let text = program.file(&node.span.file).map(|f| f.text.as_str()).unwrap_or("");
        for (i, line) in text.lines().enumerate().skip(node.span.start.line - 1).take(node.span.last_line() + 1 - node.span.start.line) {
            match color {
                Some(c) => {
                    let _ = writeln!(out, "{:>5} | {c}{line}{RESET}", i + 1);
                }
                None => {
                    let _ = writeln!(out, "{:>5} | {line}", i + 1);
                }
            }
        }
    }
    out
}

/// `file:line:col: type: message` anchored at each tuple's `ast` node.
pub fn messages(ts: &TupleSet, program: &Program) -> String {
    let mut out = String::new();
    for t in ts.canonical() {
        let text = t.get("message").map(cell).unwrap_or_default();
        let kind = t.get("type").map(cell).unwrap_or_else(|| "info".into());
        let at = t.get("ast").and_then(Value::as_node).or_else(|| t.first_node());
        let loc = match at {
            Some(id) => location(program, id).map(|(_, l)| l).unwrap_or_else(|| id.to_string()),
            None => "?".into(),
        };
        let _ = writeln!(out, "{loc}: {kind}: {text}");
    }
    out
}

const HEAT: [u8; 10] = [46, 82, 118, 154, 190, 226, 220, 214, 208, 196];

/// `[bar] bucket  value  node  file:line:col`, one line per tuple in canonical order.
pub fn heatmap(ts: &TupleSet, program: &Program, color: bool) -> String {
    let Ok(entries) = heat_entries(ts) else { return table(ts) };
    let mut out = String::new();
    for e in entries {
        let b = usize::from(e.bucket);
        let bar = format!("[{}{}]", "#".repeat(b + 1), ".".repeat(9 - b));
        let bar = if color { format!("\x1b[38;5;{}m{bar}{RESET}", HEAT[b]) } else { bar };
        let loc = location(program, &e.node).map(|(_, l)| l).unwrap_or_default();
        let _ = writeln!(out, "{bar} {}  {}  {}  {loc}", e.bucket, e.value, e.node);
    }
    out
}
