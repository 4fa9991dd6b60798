//! Semantic layer: call resolution, the static call graph, and package
//! dependencies derived from imports.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use crate::minilang::{Node, NodeId, NodeKind, Program};
use crate::tuple::{Tuple, TupleSet, Value};

/// A call site that could not be bound to exactly one method.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnresolvedCall {
    pub site: NodeId,
    pub callee: String,
    pub reason: Unresolved,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unresolved {
    Unknown,
    Ambiguous,
}

impl fmt::Display for UnresolvedCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let why = match self.reason {
            Unresolved::Unknown => "no such method",
            Unresolved::Ambiguous => "ambiguous name",
        };
        write!(f, "unresolved call `{}` at {}: {why}", self.callee, self.site)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CallGraph {
    /// Methods taking part in the graph, including a rooted graph's root.
    pub nodes: BTreeSet<NodeId>,
    pub edges: BTreeSet<(NodeId, NodeId)>,
    pub unresolved: Vec<UnresolvedCall>,
}

impl CallGraph {
    pub fn to_tuples(&self) -> TupleSet {
        self.edges
            .iter()
            .map(|(caller, callee)| {
                Tuple::new(
                    Some("calls"),
                    [("caller", Value::node(caller)), ("callee", Value::node(callee))],
                )
                .expect("static shape")
            })
            .collect()
    }

    pub fn node_tuples(&self) -> TupleSet {
        self.nodes.iter().map(Tuple::node).collect()
    }
}

/// Binds call sites by name.
///
/// Unqualified `f()` looks in the enclosing class, then in the classes of the
/// enclosing module, then for a program-wide unique method name. Qualified
/// `a.P.f()` must name a method exactly.
pub struct Resolver<'p> {
    program: &'p Program,
    by_name: HashMap<&'p str, Vec<&'p Node>>,
}

impl<'p> Resolver<'p> {
    pub fn new(program: &'p Program) -> Self {
        let mut by_name: HashMap<&str, Vec<&Node>> = HashMap::new();
        for m in program.nodes_of_kind(NodeKind::Method, None) {
            by_name.entry(m.name.as_deref().unwrap_or("")).or_default().push(m);
        }
        Resolver { program, by_name }
    }

    pub fn resolve_call(&self, call: &Node) -> Result<&'p Node, UnresolvedCall> {
        let callee = call.name.clone().unwrap_or_default();
        let fail = |reason| UnresolvedCall { site: call.id.clone(), callee: callee.clone(), reason };
        if callee.contains('.') {
            return match self.program.node(&NodeId::from(callee.as_str())) {
                Some(m) if m.kind == NodeKind::Method => Ok(m),
                _ => Err(fail(Unresolved::Unknown)),
            };
        }
        let candidates = self.by_name.get(callee.as_str()).map(Vec::as_slice).unwrap_or(&[]);
        let class = self.program.enclosing(&call.id, |n| n.kind == NodeKind::Class);
        let module = class.and_then(|c| self.program.parent(&c.id));
        let in_class: Vec<&Node> = candidates
            .iter()
            .copied()
            .filter(|m| class.is_some_and(|c| self.program.parent(&m.id).is_some_and(|p| p.id == c.id)))
            .collect();
        if let [m] = in_class.as_slice() {
            return Ok(m);
        }
        let in_module: Vec<&Node> = candidates
            .iter()
            .copied()
            .filter(|m| {
                let owner = self.program.parent(&m.id).and_then(|c| self.program.parent(&c.id));
                matches!((owner, module), (Some(o), Some(md)) if o.id == md.id)
            })
            .collect();
        match in_module.len() {
            1 => return Ok(in_module[0]),
            n if n > 1 => return Err(fail(Unresolved::Ambiguous)),
            _ => {}
        }
        match candidates {
            [m] => Ok(m),
            [] => Err(fail(Unresolved::Unknown)),
            _ => Err(fail(Unresolved::Ambiguous)),
        }
    }

    /// Resolved callees of one method, plus its unresolved sites.
    fn callees(&self, method: &Node) -> (Vec<&'p Node>, Vec<UnresolvedCall>) {
        let mut found = Vec::new();
        let mut unresolved = Vec::new();
        for n in method.descendants() {
            if n.kind == NodeKind::CallExpression {
                match self.resolve_call(n) {
                    Ok(m) => found.push(m),
                    Err(u) => unresolved.push(u),
                }
            }
        }
        (found, unresolved)
    }
}

/// Every resolved call edge, or the transitive callee graph of `root`.
pub fn build_call_graph(program: &Program, root: Option<&NodeId>) -> Result<CallGraph, NodeId> {
    let resolver = Resolver::new(program);
    let mut g = CallGraph::default();
    match root {
        None => {
            for m in program.nodes_of_kind(NodeKind::Method, None) {
                let (callees, mut unresolved) = resolver.callees(m);
                for c in callees {
                    g.nodes.insert(m.id.clone());
                    g.nodes.insert(c.id.clone());
                    g.edges.insert((m.id.clone(), c.id.clone()));
                }
                g.unresolved.append(&mut unresolved);
            }
        }
        Some(root) => {
            let start = match program.node(root) {
                Some(m) if m.kind == NodeKind::Method => m,
                _ => return Err(root.clone()),
            };
            g.nodes.insert(start.id.clone());
            let mut queue = VecDeque::from([start]);
            while let Some(m) = queue.pop_front() {
                let (callees, mut unresolved) = resolver.callees(m);
                g.unresolved.append(&mut unresolved);
                for c in callees {
                    g.edges.insert((m.id.clone(), c.id.clone()));
                    if g.nodes.insert(c.id.clone()) {
                        queue.push_back(c);
                    }
                }
            }
        }
    }
    Ok(g)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PackageDeps {
    /// Class id to its dot-joined module chain.
    pub class_package: BTreeMap<NodeId, String>,
    /// Class id to the package of every import, in source order.
    pub imports: BTreeMap<NodeId, Vec<String>>,
}

/// Dot-joined names of the modules enclosing `node`, outermost first.
pub fn package_of(program: &Program, node: &NodeId) -> String {
    let mut parts: Vec<&str> = program
        .ancestors(node)
        .filter(|n| n.kind == NodeKind::Module)
        .filter_map(|n| n.name.as_deref())
        .collect();
    parts.reverse();
    parts.join(".")
}

/// Packages imported by a class: every import name minus its last segment.
/// Imports without a package prefix are skipped.
pub fn imported_packages(class: &Node) -> Vec<String> {
    class
        .children()
        .filter(|c| c.kind == NodeKind::NameImport)
        .filter_map(|imp| imp.children().next()?.dotted_name())
        .filter_map(|name| name.rsplit_once('.').map(|(pkg, _)| pkg.to_string()))
        .collect()
}

pub fn package_deps(program: &Program) -> PackageDeps {
    let mut deps = PackageDeps::default();
    for class in program.nodes_of_kind(NodeKind::Class, None) {
        deps.class_package.insert(class.id.clone(), package_of(program, &class.id));
        deps.imports.insert(class.id.clone(), imported_packages(class));
    }
    deps
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instability {
    pub package: String,
    pub efferent: u64,
    pub afferent: u64,
    pub instability: f64,
}

/// Instability `Ce / (Ce + Ca)` per package, or 1 when both counts are zero.
///
/// Ce of a package counts its input classes that import anything; Ca counts
/// import entries naming the package. Packages imported by the input classes
/// are reported as well as the packages containing them.
pub fn instability<'a>(program: &Program, classes: impl IntoIterator<Item = &'a NodeId>) -> Vec<Instability> {
    let mut packages = BTreeSet::new();
    let mut eff: BTreeMap<String, u64> = BTreeMap::new();
    let mut aff: BTreeMap<String, u64> = BTreeMap::new();
    for id in classes {
        let Some(class) = program.node(id).filter(|n| n.kind == NodeKind::Class) else {
            continue;
        };
        let package = package_of(program, id);
        let deps = imported_packages(class);
        if !deps.is_empty() {
            *eff.entry(package.clone()).or_default() += 1;
        }
        for dep in deps {
            *aff.entry(dep.clone()).or_default() += 1;
            packages.insert(dep);
        }
        packages.insert(package);
    }
    packages
        .into_iter()
        .map(|p| {
            let e = eff.get(&p).copied().unwrap_or(0);
            let a = aff.get(&p).copied().unwrap_or(0);
            let i = if e + a > 0 { e as f64 / (e + a) as f64 } else { 1.0 };
            Instability { package: p, efferent: e, afferent: a, instability: i }
        })
        .collect()
}
