//! The small Java-like language that queries run against.
//!
//! Every source file holds exactly one top-level `module`. Modules nest and
//! act as packages; classes hold imports and methods; methods are untyped.
//! The grammar is in `docs/grammar.ebnf`.
//!
//! Each node carries a [`NodeId`]. Declarations (modules, classes, methods)
//! are named by their dotted qualified name, everything else by a role path
//! below its nearest declaration, e.g. `a.P.m/body[2]/then[0]`.

mod lexer;
mod parser;
mod printer;

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

pub use parser::parse_file;
pub use printer::{print_file, print_node};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{file}:{line}:{column}: {message}")]
pub struct ParseError {
    pub file: String,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProgramError {
    #[error("unknown node id `{0}`")]
    UnknownNodeId(String),
    #[error("`{0}` is not a method")]
    NotAMethod(String),
    #[error("`{0}` is not a statement")]
    NotAStatement(String),
    #[error("`{0}` is not a declaration")]
    NotADeclaration(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Io(String),
}

/// Hierarchical, stable node identifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(String);

impl NodeId {
    /// Validates `ident(.ident)*(/ident([digits])?)*`, allowing a trailing
    /// `[digits]` directly on the dotted head as well.
    pub fn parse(s: &str) -> Option<NodeId> {
        let mut segments = s.split('/');
        let head = segments.next()?;
        let (head_name, _) = split_index(head)?;
        if head_name.is_empty() || !head_name.split('.').all(crate::tuple::is_identifier) {
            return None;
        }
        for seg in segments {
            let (name, _) = split_index(seg)?;
            if !crate::tuple::is_identifier(name) {
                return None;
            }
        }
        Some(NodeId(s.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    fn child(&self, step: &str) -> NodeId {
        NodeId(format!("{}/{}", self.0, step))
    }

    fn member(&self, name: &str) -> NodeId {
        NodeId(format!("{}.{}", self.0, name))
    }

    fn item(&self, index: usize) -> NodeId {
        NodeId(format!("{}[{}]", self.0, index))
    }
}

fn split_index(seg: &str) -> Option<(&str, Option<usize>)> {
    match seg.find('[') {
        None => Some((seg, None)),
        Some(open) => {
            let rest = seg[open + 1..].strip_suffix(']')?;
            if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            Some((&seg[..open], Some(rest.parse().ok()?)))
        }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s)
    }
}

impl From<&NodeId> for NodeId {
    fn from(id: &NodeId) -> Self {
        id.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Module,
    NameImport,
    Class,
    Method,
    Parameter,
    Block,
    DeclarationStatement,
    ExpressionStatement,
    IfStatement,
    LoopStatement,
    ReturnStatement,
    PrintStatement,
    CallExpression,
    ReferenceExpression,
    BinaryExpression,
    IntLiteral,
    StringLiteral,
}

impl NodeKind {
    pub const ALL: [NodeKind; 17] = [
        NodeKind::Module,
        NodeKind::NameImport,
        NodeKind::Class,
        NodeKind::Method,
        NodeKind::Parameter,
        NodeKind::Block,
        NodeKind::DeclarationStatement,
        NodeKind::ExpressionStatement,
        NodeKind::IfStatement,
        NodeKind::LoopStatement,
        NodeKind::ReturnStatement,
        NodeKind::PrintStatement,
        NodeKind::CallExpression,
        NodeKind::ReferenceExpression,
        NodeKind::BinaryExpression,
        NodeKind::IntLiteral,
        NodeKind::StringLiteral,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NodeKind::Module => "Module",
            NodeKind::NameImport => "NameImport",
            NodeKind::Class => "Class",
            NodeKind::Method => "Method",
            NodeKind::Parameter => "Parameter",
            NodeKind::Block => "Block",
            NodeKind::DeclarationStatement => "DeclarationStatement",
            NodeKind::ExpressionStatement => "ExpressionStatement",
            NodeKind::IfStatement => "IfStatement",
            NodeKind::LoopStatement => "LoopStatement",
            NodeKind::ReturnStatement => "ReturnStatement",
            NodeKind::PrintStatement => "PrintStatement",
            NodeKind::CallExpression => "CallExpression",
            NodeKind::ReferenceExpression => "ReferenceExpression",
            NodeKind::BinaryExpression => "BinaryExpression",
            NodeKind::IntLiteral => "IntLiteral",
            NodeKind::StringLiteral => "StringLiteral",
        }
    }

    pub fn is_statement(self) -> bool {
        matches!(
            self,
            NodeKind::DeclarationStatement
                | NodeKind::ExpressionStatement
                | NodeKind::IfStatement
                | NodeKind::LoopStatement
                | NodeKind::ReturnStatement
                | NodeKind::PrintStatement
        )
    }

    pub fn is_expression(self) -> bool {
        matches!(
            self,
            NodeKind::CallExpression
                | NodeKind::ReferenceExpression
                | NodeKind::BinaryExpression
                | NodeKind::IntLiteral
                | NodeKind::StringLiteral
        )
    }

    pub fn is_declaration(self) -> bool {
        matches!(self, NodeKind::Module | NodeKind::Class | NodeKind::Method)
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A concrete kind or one of the abstract groups `Statement` / `Expression`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KindFilter {
    Any,
    Statement,
    Expression,
    Kind(NodeKind),
}

impl KindFilter {
    pub fn parse(s: &str) -> Option<KindFilter> {
        match s {
            "Statement" => Some(KindFilter::Statement),
            "Expression" => Some(KindFilter::Expression),
            "Node" | "Any" => Some(KindFilter::Any),
            _ => NodeKind::ALL.iter().find(|k| k.name() == s).map(|k| KindFilter::Kind(*k)),
        }
    }

    pub fn matches(self, kind: NodeKind) -> bool {
        match self {
            KindFilter::Any => true,
            KindFilter::Statement => kind.is_statement(),
            KindFilter::Expression => kind.is_expression(),
            KindFilter::Kind(k) => k == kind,
        }
    }
}

impl From<NodeKind> for KindFilter {
    fn from(k: NodeKind) -> Self {
        KindFilter::Kind(k)
    }
}

/// 1-based line and column (in chars), plus the byte offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
    pub offset: usize,
}

/// Half-open source range: `start` is the first char, `end` one past the last.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Span {
    pub file: Arc<str>,
    pub start: Pos,
    pub end: Pos,
}

impl Span {
    /// Last line the span touches.
    pub fn last_line(&self) -> usize {
        if self.end.col == 1 && self.end.line > self.start.line {
            self.end.line - 1
        } else {
            self.end.line
        }
    }

    pub fn overlaps_lines(&self, first: usize, last: usize) -> bool {
        self.start.line <= last && first <= self.last_line()
    }

    pub fn contains(&self, line: usize, col: usize) -> bool {
        (self.start.line, self.start.col) <= (line, col) && (line, col) < (self.end.line, self.end.col)
    }
}

/// Where a node hangs below its parent; drives id minting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    /// Named declaration: id is `parent.name`.
    Decl,
    /// Element of a block: id is `block[i]`.
    Item(usize),
    /// Named step with optional ordinal: id is `parent/name` or `parent/name[i]`.
    Step(&'static str, Option<usize>),
}

#[derive(Debug, Clone)]
pub struct Node {
    pub kind: NodeKind,
    /// Declared or referenced name.
    pub name: Option<String>,
    /// Literal text or operator.
    pub token: Option<String>,
    pub role: Role,
    pub span: Span,
    pub id: NodeId,
    pub children: Vec<Arc<Node>>,
}

impl Node {
    pub(crate) fn new(kind: NodeKind, role: Role) -> Node {
        Node {
            kind,
            name: None,
            token: None,
            role,
            span: Span::default(),
            id: NodeId(String::new()),
            children: Vec::new(),
        }
    }

    /// `print(args...);` with fresh (unminted) ids.
    pub fn print_statement(args: Vec<Node>) -> Node {
        let mut n = Node::new(NodeKind::PrintStatement, Role::Item(0));
        n.children = args
            .into_iter()
            .enumerate()
            .map(|(i, mut a)| {
                a.role = Role::Step("arg", Some(i));
                Arc::new(a)
            })
            .collect();
        n
    }

    pub fn string_literal(s: &str) -> Node {
        let mut n = Node::new(NodeKind::StringLiteral, Role::Step("value", None));
        n.token = Some(s.to_string());
        n
    }

    pub fn reference(name: &str) -> Node {
        let mut n = Node::new(NodeKind::ReferenceExpression, Role::Step("value", None));
        n.name = Some(name.to_string());
        n
    }

    pub fn children(&self) -> impl Iterator<Item = &Node> {
        self.children.iter().map(|c| c.as_ref())
    }

    pub fn child_by_role(&self, role: &str) -> Option<&Node> {
        self.children().find(|c| matches!(c.role, Role::Step(r, None) if r == role))
    }

    /// Statement list of a method body.
    pub fn body(&self) -> Option<&Node> {
        match self.kind {
            NodeKind::Method => self.child_by_role("body"),
            _ => None,
        }
    }

    pub fn parameters(&self) -> impl Iterator<Item = &Node> {
        self.children().filter(|c| c.kind == NodeKind::Parameter)
    }

    /// Preorder traversal including `self`.
    pub fn descendants(&self) -> Vec<&Node> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(n.children.iter().rev().map(|c| c.as_ref()));
        }
        out
    }

    /// Structural equality ignoring spans.
    pub fn same_shape(&self, other: &Node) -> bool {
        self.kind == other.kind
            && self.name == other.name
            && self.token == other.token
            && self.role == other.role
            && self.id == other.id
            && self.children.len() == other.children.len()
            && self.children.iter().zip(&other.children).all(|(a, b)| a.same_shape(b))
    }

    /// Dotted name of a reference chain like `a.b.C`.
    pub fn dotted_name(&self) -> Option<String> {
        if self.kind != NodeKind::ReferenceExpression {
            return None;
        }
        let own = self.name.clone()?;
        match self.child_by_role("prefix") {
            Some(p) => Some(format!("{}.{}", p.dotted_name()?, own)),
            None => Some(own),
        }
    }
}

/// Assigns ids to `node` and its subtree given its parent's id.
pub(crate) fn mint(node: &mut Node, parent: Option<&NodeId>) {
    node.id = match (node.role, parent) {
        (Role::Decl, Some(p)) => p.member(node.name.as_deref().unwrap_or("")),
        (Role::Decl, None) => NodeId(node.name.clone().unwrap_or_default()),
        (Role::Item(i), Some(p)) => p.item(i),
        (Role::Step(r, None), Some(p)) => p.child(r),
        (Role::Step(r, Some(i)), Some(p)) => p.child(&format!("{r}[{i}]")),
        (_, None) => NodeId(String::new()),
    };
    let id = node.id.clone();
    for child in &mut node.children {
        mint(Arc::make_mut(child), Some(&id));
    }
}

#[derive(Debug, Clone)]
pub struct SourceFile {
    /// Path relative to the corpus root, `/`-separated.
    pub path: String,
    pub text: String,
    pub root: Arc<Node>,
}

/// A parsed set of source files with an id index.
#[derive(Debug, Clone, Default)]
pub struct Program {
    files: Vec<SourceFile>,
    index: HashMap<NodeId, Arc<Node>>,
    parents: HashMap<NodeId, NodeId>,
    order: Vec<NodeId>,
}

impl Program {
    pub fn parse<P: AsRef<str>, T: AsRef<str>>(sources: &[(P, T)]) -> Result<Program, ParseError> {
        let mut files = Vec::with_capacity(sources.len());
        for (path, text) in sources {
            let root = parse_file(path.as_ref(), text.as_ref())?;
            files.push(SourceFile {
                path: path.as_ref().to_string(),
                text: text.as_ref().to_string(),
                root: Arc::new(root),
            });
        }
        Program::from_files(files)
    }

    /// Reads every `*.mini` file below `dir`, in path order.
    pub fn load_dir(dir: &Path) -> Result<Program, ProgramError> {
        let sources = read_sources(dir).map_err(|e| ProgramError::Io(e.to_string()))?;
        Ok(Program::parse(&sources)?)
    }

    fn from_files(files: Vec<SourceFile>) -> Result<Program, ParseError> {
        let mut p = Program { files, ..Default::default() };
        let roots: Vec<(Arc<Node>, String)> =
            p.files.iter().map(|f| (f.root.clone(), f.path.clone())).collect();
        for (root, path) in roots {
            let mut stack: Vec<(Arc<Node>, Option<NodeId>)> = vec![(root, None)];
            while let Some((node, parent)) = stack.pop() {
                if p.index.contains_key(&node.id) {
                    return Err(ParseError {
                        file: path.clone(),
                        line: node.span.start.line,
                        column: node.span.start.col,
                        message: format!("duplicate declaration `{}`", node.id),
                    });
                }
                if let Some(parent) = parent {
                    p.parents.insert(node.id.clone(), parent);
                }
                p.order.push(node.id.clone());
                p.index.insert(node.id.clone(), node.clone());
                for child in node.children.iter().rev() {
                    stack.push((child.clone(), Some(node.id.clone())));
                }
            }
        }
        Ok(p)
    }

    pub fn files(&self) -> &[SourceFile] {
        &self.files
    }

    pub fn roots(&self) -> impl Iterator<Item = &Node> {
        self.files.iter().map(|f| f.root.as_ref())
    }

    pub fn file(&self, path: &str) -> Option<&SourceFile> {
        self.files.iter().find(|f| f.path == path)
    }

    pub fn file_of(&self, node: &Node) -> Option<&SourceFile> {
        self.file(&node.span.file)
    }

    pub fn node(&self, id: &NodeId) -> Option<&Node> {
        self.index.get(id).map(|n| n.as_ref())
    }

    pub fn resolve(&self, id: &NodeId) -> Result<&Node, ProgramError> {
        self.node(id).ok_or_else(|| ProgramError::UnknownNodeId(id.to_string()))
    }

    pub fn parent(&self, id: &NodeId) -> Option<&Node> {
        self.parents.get(id).and_then(|p| self.node(p))
    }

    pub fn ancestors<'a>(&'a self, id: &NodeId) -> impl Iterator<Item = &'a Node> + 'a {
        let mut cur = self.parents.get(id);
        std::iter::from_fn(move || {
            let pid = cur?;
            cur = self.parents.get(pid);
            self.node(pid)
        })
    }

    /// `id` itself or its nearest ancestor matching `pred`.
    pub fn enclosing(&self, id: &NodeId, pred: impl Fn(&Node) -> bool) -> Option<&Node> {
        let me = self.node(id)?;
        if pred(me) {
            return Some(me);
        }
        self.ancestors(id).find(|n| pred(n))
    }

    /// All nodes in document order.
    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.order.iter().filter_map(|id| self.node(id))
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Nodes matching `kind` inside `scope` (inclusive) or the whole program.
    pub fn nodes_of_kind<'a>(&'a self, kind: impl Into<KindFilter>, scope: Option<&'a Node>) -> Vec<&'a Node> {
        let kind = kind.into();
        match scope {
            Some(s) => s.descendants().into_iter().filter(|n| kind.matches(n.kind)).collect(),
            None => self.nodes().filter(|n| kind.matches(n.kind)).collect(),
        }
    }

    /// Innermost node whose span contains the position.
    pub fn node_at(&self, path: &str, line: usize, col: usize) -> Option<&Node> {
        let mut cur = self.file(path)?.root.as_ref();
        if !cur.span.contains(line, col) {
            return None;
        }
        while let Some(next) = cur.children().find(|c| c.span.contains(line, col)) {
            cur = next;
        }
        Some(cur)
    }

    /// Dot-joined enclosing module/class names plus the node's own name.
    pub fn qualified_name(&self, node: &Node) -> Result<String, ProgramError> {
        match node.kind {
            NodeKind::Module | NodeKind::Class | NodeKind::Method => Ok(node.id.to_string()),
            NodeKind::Parameter => {
                let method = self
                    .parent(&node.id)
                    .ok_or_else(|| ProgramError::NotADeclaration(node.id.to_string()))?;
                Ok(format!("{}.{}", method.id, node.name.as_deref().unwrap_or("")))
            }
            _ => Err(ProgramError::NotADeclaration(node.id.to_string())),
        }
    }

    /// New program with `stmts` placed at the front of `method`'s body.
    pub fn insert_statements(&self, method: &NodeId, stmts: Vec<Node>) -> Result<Program, ProgramError> {
        let target = self.resolve(method)?;
        if target.kind != NodeKind::Method {
            return Err(ProgramError::NotAMethod(method.to_string()));
        }
        if let Some(bad) = stmts.iter().find(|s| !s.kind.is_statement()) {
            return Err(ProgramError::NotAStatement(bad.kind.to_string()));
        }
        let mut new_method = target.clone();
        let body_pos = new_method
            .children
            .iter()
            .position(|c| c.kind == NodeKind::Block)
            .expect("methods always have a body");
        let body = Arc::make_mut(&mut new_method.children[body_pos]);
        let anchor = body.span.clone();
        let mut items: Vec<Arc<Node>> = stmts
            .into_iter()
            .map(|mut s| {
                set_span(&mut s, &anchor);
                Arc::new(s)
            })
            .collect();
        items.append(&mut body.children);
        for (i, item) in items.iter_mut().enumerate() {
            Arc::make_mut(item).role = Role::Item(i);
        }
        body.children = items;
        let parent_id = self.parents.get(method).cloned();
        mint(&mut new_method, parent_id.as_ref());
        self.replace_node(method, new_method)
    }

    /// Rebuilds the path from the root down to `id` with `replacement` in place.
    fn replace_node(&self, id: &NodeId, replacement: Node) -> Result<Program, ProgramError> {
        let mut chain: Vec<&Node> = self.ancestors(id).collect();
        chain.reverse();
        let mut new_child = Arc::new(replacement);
        for ancestor in chain.iter().rev() {
            let mut copy = (*ancestor).clone();
            let slot = copy
                .children
                .iter()
                .position(|c| c.id == new_child.id)
                .expect("child present in parent");
            copy.children[slot] = new_child;
            new_child = Arc::new(copy);
        }
        let files = self
            .files
            .iter()
            .map(|f| {
                if f.root.id == new_child.id {
                    SourceFile { root: new_child.clone(), ..f.clone() }
                } else {
                    f.clone()
                }
            })
            .collect();
        Ok(Program::from_files(files)?)
    }

    /// Pretty-printed text for every file.
    pub fn pretty_print(&self) -> Vec<(String, String)> {
        self.files.iter().map(|f| (f.path.clone(), print_file(&f.root))).collect()
    }

    /// Same files, same ids, same structure; spans ignored.
    pub fn same_shape(&self, other: &Program) -> bool {
        self.files.len() == other.files.len()
            && self
                .files
                .iter()
                .zip(&other.files)
                .all(|(a, b)| a.path == b.path && a.root.same_shape(&b.root))
    }
}

fn set_span(node: &mut Node, span: &Span) {
    node.span = span.clone();
    for c in &mut node.children {
        set_span(Arc::make_mut(c), span);
    }
}

/// `(relative path, text)` for every `*.mini` file below `dir`, sorted.
pub fn read_sources(dir: &Path) -> std::io::Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    collect(dir, dir, &mut out)?;
    out.sort();
    Ok(out)
}

fn collect(root: &Path, dir: &Path, out: &mut Vec<(String, String)>) -> std::io::Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect(root, &path, out)?;
        } else if path.extension().is_some_and(|e| e == "mini") {
            let rel = path
                .strip_prefix(root)
                .expect("walk stays below root")
                .components()
                .map(|c| c.as_os_str().to_string_lossy().into_owned())
                .collect::<Vec<_>>()
                .join("/");
            out.push((rel, std::fs::read_to_string(&path)?));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests;
