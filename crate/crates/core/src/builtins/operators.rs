use std::collections::{BTreeMap, BTreeSet, VecDeque};

use regex::Regex;

use super::resources::regex;
use super::{flag, Flags};
use crate::engine::{Call, Context, Output, QueryError};
use crate::minilang::NodeId;
use crate::tuple::{is_identifier, Tuple, TupleSet, Value};

enum Predicate {
    Equals(String, String),
    Matches(String, Regex),
}

impl Predicate {
    fn parse(arg: &str) -> Result<Predicate, QueryError> {
        let split = arg.find(['=', '~']);
        let bad = || QueryError::BadArgument(format!("expected KEY=VALUE or KEY~REGEX, got `{arg}`"));
        let at = split.ok_or_else(bad)?;
        let (key, rest) = (&arg[..at], &arg[at + 1..]);
        if !is_identifier(key) {
            return Err(bad());
        }
        Ok(if arg.as_bytes()[at] == b'=' {
            Predicate::Equals(key.to_string(), rest.to_string())
        } else {
            Predicate::Matches(key.to_string(), regex(rest)?)
        })
    }

    fn holds(&self, t: &Tuple) -> bool {
        match self {
            Predicate::Equals(k, v) => t.get(k).is_some_and(|x| x.plain() == *v),
            Predicate::Matches(k, re) => t.get(k).is_some_and(|x| re.is_match(&x.plain())),
        }
    }
}

/// Tuples of `input` passing `-t TAG` and every `KEY=VALUE` / `KEY~REGEX`.
pub fn select(input: &TupleSet, args: &[String]) -> Result<TupleSet, QueryError> {
    let f = Flags::parse(args, &[flag("t", 1)], usize::MAX)?;
    let preds = f.positional.iter().map(|a| Predicate::parse(a)).collect::<Result<Vec<_>, _>>()?;
    let tag = f.value("t");
    Ok(input
        .iter()
        .filter(|t| tag.map_or(true, |g| t.tag() == g))
        .filter(|t| preds.iter().all(|p| p.holds(t)))
        .cloned()
        .collect())
}

pub(super) fn q_select(call: Call<'_>, _: &mut Context) -> Result<Output, QueryError> {
    let input = call.input().cloned().unwrap_or_default();
    Ok(Output::tuples(select(&input, call.args)?))
}

/// Parsed `join` arguments: `TAG.ELEM` or bare `ELEM` selectors plus `-as`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinSpec {
    pub selectors: Vec<(Option<String>, String)>,
    pub tag: Option<String>,
}

impl JoinSpec {
    pub fn parse(args: &[String]) -> Result<JoinSpec, QueryError> {
        let f = Flags::parse(args, &[flag("as", 1)], usize::MAX)?;
        let mut selectors = Vec::new();
        for word in f.positional.iter().flat_map(|a| a.split(',')).filter(|w| !w.is_empty()) {
            let (tag, elem) = match word.split_once('.') {
                Some((t, e)) => (Some(t.to_string()), e.to_string()),
                None => (None, word.to_string()),
            };
            if tag.as_deref().is_some_and(|t| !is_identifier(t)) || !is_identifier(&elem) {
                return Err(QueryError::BadArgument(format!("bad selector `{word}`")));
            }
            selectors.push((tag, elem));
        }
        if let Some(t) = f.value("as") {
            if !is_identifier(t) {
                return Err(QueryError::BadArgument(format!("bad tag `{t}`")));
            }
        }
        Ok(JoinSpec { selectors, tag: f.value("as").map(str::to_string) })
    }

    /// Distinct tags named by qualified selectors, in order.
    pub fn tags(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for t in self.selectors.iter().filter_map(|(t, _)| t.as_deref()) {
            if !out.contains(&t) {
                out.push(t);
            }
        }
        out
    }
}

/// True when every element name the tuples share carries equal values.
fn compatible(a: &Tuple, b: &Tuple) -> bool {
    a.elements().iter().all(|(n, v)| b.get(n).map_or(true, |w| w == v))
}

/// Natural join of the tag groups named in `spec`.
///
/// One output tuple per combination (one tuple from each group) whose shared
/// element names agree, holding the selected elements under their last path
/// segment. Combinations lacking a selected element are skipped.
pub fn join(input: &TupleSet, spec: &JoinSpec) -> Result<TupleSet, QueryError> {
    let tags = spec.tags();
    if tags.len() < 2 {
        return Err(QueryError::BadArgument("join needs selectors from at least two tags".into()));
    }
    let groups: Vec<Vec<&Tuple>> = tags.iter().map(|t| input.with_tag(t).collect()).collect();
    if groups.iter().any(Vec::is_empty) {
        return Ok(TupleSet::new());
    }
    let has = |g: usize, e: &str| groups[g].iter().any(|t| t.get(e).is_some());
    let mut picks: Vec<(usize, &str)> = Vec::new();
    for (tag, elem) in &spec.selectors {
        let g = match tag {
            Some(t) => {
                let g = tags.iter().position(|x| x == t).expect("collected above");
                if !has(g, elem) {
                    return Err(QueryError::MissingSelector(format!("{t}.{elem}")));
                }
                g
            }
            None => (0..groups.len()).find(|&g| has(g, elem)).ok_or_else(|| QueryError::MissingSelector(elem.clone()))?,
        };
        if !picks.iter().any(|(_, e)| e == elem) {
            picks.push((g, elem));
        }
    }
    let out_tag = spec.tag.clone().unwrap_or_else(|| tags.join("_"));

    let mut out = TupleSet::new();
    let mut chosen: Vec<&Tuple> = Vec::with_capacity(groups.len());
    fn walk<'a>(
        groups: &[Vec<&'a Tuple>],
        chosen: &mut Vec<&'a Tuple>,
        emit: &mut dyn FnMut(&[&'a Tuple]),
    ) {
        if chosen.len() == groups.len() {
            emit(chosen);
            return;
        }
        for &t in &groups[chosen.len()] {
            if chosen.iter().all(|c| compatible(c, t)) {
                chosen.push(t);
                walk(groups, chosen, emit);
                chosen.pop();
            }
        }
    }
    walk(&groups, &mut chosen, &mut |combo| {
        let elements: Option<Vec<(&str, Value)>> =
            picks.iter().map(|&(g, e)| combo[g].get(e).map(|v| (e, v.clone()))).collect();
        if let Some(elements) = elements {
            out.insert(Tuple::new(Some(out_tag.as_str()), elements).expect("selector names are distinct identifiers"));
        }
    });
    Ok(out)
}

pub(super) fn q_join(call: Call<'_>, _: &mut Context) -> Result<Output, QueryError> {
    let spec = JoinSpec::parse(call.args)?;
    let input = call.input().cloned().unwrap_or_default();
    Ok(Output::tuples(join(&input, &spec)?))
}

fn successors(edges: &[(NodeId, NodeId)]) -> BTreeMap<&NodeId, Vec<&NodeId>> {
    let mut succ: BTreeMap<&NodeId, Vec<&NodeId>> = BTreeMap::new();
    for (a, b) in edges {
        succ.entry(a).or_default().push(b);
    }
    succ
}

fn reach<'a>(succ: &BTreeMap<&'a NodeId, Vec<&'a NodeId>>, start: &NodeId) -> BTreeSet<&'a NodeId> {
    let mut seen = BTreeSet::new();
    let mut queue: VecDeque<&NodeId> = succ.get(start).into_iter().flatten().copied().collect();
    while let Some(n) = queue.pop_front() {
        if seen.insert(n) {
            queue.extend(succ.get(n).into_iter().flatten().copied());
        }
    }
    seen
}

/// Nodes reachable from `start` through at least one edge.
pub fn reachable_from(edges: &[(NodeId, NodeId)], start: &NodeId) -> BTreeSet<NodeId> {
    reach(&successors(edges), start).into_iter().cloned().collect()
}

/// Nodes lying on a directed cycle (self-loops included).
pub fn self_reachable(edges: &[(NodeId, NodeId)]) -> BTreeSet<NodeId> {
    let succ = successors(edges);
    succ.keys().filter(|n| reach(&succ, n).contains(*n)).map(|n| (*n).clone()).collect()
}

/// `reachable (-self | -from NODEID)`
///
/// Relation tuples (two node elements, first to second) form the graph and
/// are consumed; single-node tuples pass through when their node is kept.
pub(super) fn q_reachable(call: Call<'_>, ctx: &mut Context) -> Result<Output, QueryError> {
    let f = Flags::parse(call.args, &[flag("self", 0), flag("from", 1)], 0)?;
    f.exclusive("self", "from")?;
    let input = call.input().cloned().unwrap_or_default();
    let mut edges = Vec::new();
    let mut passthrough = Vec::new();
    for t in &input {
        let refs: Vec<&NodeId> = t.node_refs().collect();
        match refs.as_slice() {
            [a, b] => edges.push(((*a).clone(), (*b).clone())),
            [_] => passthrough.push(t),
            _ => return Err(QueryError::NotARelation(t.to_string())),
        }
    }
    let keep = if f.has("self") {
        self_reachable(&edges)
    } else {
        let start = match f.value("from") {
            Some(s) => NodeId::parse(s).ok_or_else(|| QueryError::BadArgument(format!("bad node id `{s}`")))?,
            None => {
                let in_graph = |id: &NodeId| edges.iter().any(|(a, b)| a == id || b == id);
                let focus = ctx.focus.as_ref().ok_or(QueryError::MissingStart)?;
                std::iter::once(focus.clone())
                    .chain(ctx.program.ancestors(focus).map(|n| n.id.clone()))
                    .find(|id| in_graph(id))
                    .ok_or(QueryError::MissingStart)?
            }
        };
        reachable_from(&edges, &start)
    };
    let mut out: TupleSet = keep.iter().map(Tuple::node).collect();
    out.extend(passthrough.into_iter().filter(|t| t.first_node().is_some_and(|n| keep.contains(n))).cloned());
    Ok(Output::tuples(out))
}
