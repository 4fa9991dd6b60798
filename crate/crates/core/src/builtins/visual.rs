use std::fmt::Write as _;

use super::{flag, Flags};
use crate::engine::{Call, Context, Output, QueryError, Renderer};
use crate::minilang::NodeId;
use crate::tuple::{Tuple, TupleSet, Value};

pub const COLORS: &[&str] = &["red", "green", "yellow", "blue", "magenta", "cyan"];

fn input(call: &Call<'_>) -> TupleSet {
    call.input().cloned().unwrap_or_default()
}

pub(super) fn table(call: Call<'_>, _: &mut Context) -> Result<Output, QueryError> {
    Flags::parse(call.args, &[], 0)?;
    Ok(Output::render(Renderer::Table, input(&call)))
}

/// `highlight [-color NAME]`
pub(super) fn highlight(call: Call<'_>, _: &mut Context) -> Result<Output, QueryError> {
    let f = Flags::parse(call.args, &[flag("color", 1)], 0)?;
    let color = f.value("color").map(str::to_string);
    if let Some(c) = &color {
        if !COLORS.contains(&c.as_str()) {
            return Err(QueryError::BadArgument(format!("unknown color `{c}`; use one of {}", COLORS.join(", "))));
        }
    }
    let ts = input(&call);
    if let Some(t) = ts.iter().find(|t| t.first_node().is_none()) {
        return Err(QueryError::NoNodeElement(t.to_string()));
    }
    Ok(Output::render(Renderer::Highlight { color }, ts))
}

fn check_relation(ts: &TupleSet) -> Result<(), QueryError> {
    match ts.iter().find(|t| t.node_refs().count() != 2) {
        Some(t) => Err(QueryError::NotARelation(t.to_string())),
        None => Ok(()),
    }
}

pub(super) fn arrows(call: Call<'_>, _: &mut Context) -> Result<Output, QueryError> {
    Flags::parse(call.args, &[], 0)?;
    let ts = input(&call);
    check_relation(&ts)?;
    Ok(Output::render(Renderer::Arrows, ts))
}

pub(super) fn messages(call: Call<'_>, _: &mut Context) -> Result<Output, QueryError> {
    Flags::parse(call.args, &[], 0)?;
    let ts = input(&call);
    for t in &ts {
        if t.get("message").and_then(Value::as_text).is_none() {
            return Err(QueryError::BadArgument(format!("tuple has no `message` text: {t}")));
        }
        if t.get("ast").and_then(Value::as_node).is_none() {
            return Err(QueryError::NoNodeElement(t.to_string()));
        }
    }
    Ok(Output::render(Renderer::Messages, ts))
}

pub(super) fn heatmap(call: Call<'_>, _: &mut Context) -> Result<Output, QueryError> {
    Flags::parse(call.args, &[], 0)?;
    let ts = input(&call);
    heat_entries(&ts)?;
    Ok(Output::render(Renderer::Heatmap, ts))
}

/// `toGraphFile PATH`: writes the relation as a DOT file.
pub(super) fn to_graph_file(call: Call<'_>, ctx: &mut Context) -> Result<Output, QueryError> {
    let f = Flags::parse(call.args, &[], 1)?;
    let path = f.positional.first().ok_or_else(|| QueryError::BadArgument("toGraphFile needs a file path".into()))?;
    let ts = input(&call);
    check_relation(&ts)?;
    let full = ctx.resolve_path(path);
    std::fs::write(&full, dot_graph(&ts)).map_err(|e| QueryError::WriteFailure(format!("{}: {e}", full.display())))?;
    Ok(Output::default().warn(format!("wrote {}", full.display())))
}

/// DOT digraph with one edge per relation tuple, in canonical order.
/// Tuples without exactly two nodes are skipped.
pub fn dot_graph(ts: &TupleSet) -> String {
    let mut out = String::from("digraph codeq {\n");
    for t in ts.canonical() {
        let refs: Vec<&NodeId> = t.node_refs().collect();
        if let [a, b] = refs.as_slice() {
            let _ = writeln!(out, "    \"{a}\" -> \"{b}\" [label=\"{}\"];", t.tag());
        }
    }
    out.push_str("}\n");
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatEntry {
    pub node: NodeId,
    pub value: f64,
    /// 0 (coolest, green) to 9 (hottest, red).
    pub bucket: u8,
}

/// `floor(9 * (v - min) / (max - min))`, or 0 when all values are equal.
pub fn heat_bucket(v: f64, min: f64, max: f64) -> u8 {
    if max <= min {
        return 0;
    }
    // 9 * d / d can round to 8.999...; the maximum always lands in the top bucket
    if v >= max {
        return 9;
    }
    ((9.0 * (v - min) / (max - min)).floor()).clamp(0.0, 9.0) as u8
}

fn first_number(t: &Tuple) -> Option<f64> {
    t.elements().iter().find_map(|(_, v)| match v {
        Value::Int(_) | Value::Real(_) => v.as_f64(),
        _ => None,
    })
}

/// The first node and first number of each tuple, bucketed over the whole set.
pub fn heat_entries(ts: &TupleSet) -> Result<Vec<HeatEntry>, QueryError> {
    let mut raw = Vec::with_capacity(ts.len());
    for t in ts.canonical() {
        let node = t.first_node().ok_or_else(|| QueryError::NoNodeElement(t.to_string()))?;
        let value = first_number(t).ok_or_else(|| QueryError::NoNumericElement(t.to_string()))?;
        raw.push((node.clone(), value));
    }
    let min = raw.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let max = raw.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(raw
        .into_iter()
        .map(|(node, value)| HeatEntry { node, value, bucket: heat_bucket(value, min, max) })
        .collect())
}
