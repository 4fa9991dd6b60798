//! The tuple-set exchange format shared by every query.
//!
//! A [`TupleSet`] is a duplicate-free collection of [`Tuple`]s. Each tuple
//! carries a tag and an ordered list of uniquely named [`Value`]s. The
//! canonical text form is one tuple per line:
//!
//! ```text
//! calls: (caller: a.P.rest, callee: a.P.sleep)
//! commit: (id: "bcdef01", author: "John")
//! ```
//!
//! Text values are double-quoted, integers and reals are bare numbers, and
//! node references are bare [`NodeId`] paths.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};

use thiserror::Error;

use crate::minilang::NodeId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TupleError {
    #[error("duplicate element name `{0}`")]
    DuplicateElementName(String),
    #[error("a tuple needs at least one element")]
    EmptyTuple,
    #[error("`{0}` is not a valid identifier")]
    InvalidIdentifier(String),
    #[error("real values must be finite, got {0}")]
    NonFiniteReal(f64),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

/// Returns true for `[A-Za-z_][A-Za-z0-9_]*`.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A finite 64-bit real.
#[derive(Clone, Copy)]
pub struct Real(f64);

impl Real {
    pub fn new(v: f64) -> Result<Self, TupleError> {
        if v.is_finite() {
            Ok(Real(v))
        } else {
            Err(TupleError::NonFiniteReal(v))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl PartialEq for Real {
    fn eq(&self, other: &Self) -> bool {
        self.0.to_bits() == other.0.to_bits()
    }
}

impl Eq for Real {}

impl Hash for Real {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state)
    }
}

impl Ord for Real {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// Shortest round-trip decimal; always contains `.` or `e`.
impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Text(String),
    Int(i64),
    Real(Real),
    Node(NodeId),
}

impl Value {
    pub fn text(s: impl Into<String>) -> Self {
        Value::Text(s.into())
    }

    pub fn node(id: impl Into<NodeId>) -> Self {
        Value::Node(id.into())
    }

    pub fn real(v: f64) -> Result<Self, TupleError> {
        Real::new(v).map(Value::Real)
    }

    pub fn as_node(&self) -> Option<&NodeId> {
        match self {
            Value::Node(id) => Some(id),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }

    /// Numeric view of int and real values.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Real(r) => Some(r.get()),
            _ => None,
        }
    }

    /// The value without quoting: raw text, number, or node path.
    pub fn plain(&self) -> String {
        match self {
            Value::Text(s) => s.clone(),
            Value::Int(i) => i.to_string(),
            Value::Real(r) => r.to_string(),
            Value::Node(id) => id.to_string(),
        }
    }
}

/// Canonical rendering used by the text format.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Text(s) => write_quoted(f, s),
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(r) => write!(f, "{r}"),
            Value::Node(id) => write!(f, "{id}"),
        }
    }
}

fn write_quoted(f: &mut impl fmt::Write, s: &str) -> fmt::Result {
    f.write_char('"')?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\r' => f.write_str("\\r")?,
            '\t' => f.write_str("\\t")?,
            c if c.is_control() => write!(f, "\\u{{{:x}}}", c as u32)?,
            c => f.write_char(c)?,
        }
    }
    f.write_char('"')
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tuple {
    tag: String,
    elements: Vec<(String, Value)>,
}

impl Tuple {
    /// Builds a tuple. Without an explicit tag the first element's name is used.
    pub fn new<S: Into<String>>(
        tag: Option<&str>,
        elements: impl IntoIterator<Item = (S, Value)>,
    ) -> Result<Self, TupleError> {
        let elements: Vec<(String, Value)> =
            elements.into_iter().map(|(n, v)| (n.into(), v)).collect();
        let first = elements.first().ok_or(TupleError::EmptyTuple)?;
        for (i, (name, _)) in elements.iter().enumerate() {
            if !is_identifier(name) {
                return Err(TupleError::InvalidIdentifier(name.clone()));
            }
            if elements[..i].iter().any(|(n, _)| n == name) {
                return Err(TupleError::DuplicateElementName(name.clone()));
            }
        }
        let tag = match tag {
            Some(t) if !is_identifier(t) => return Err(TupleError::InvalidIdentifier(t.into())),
            Some(t) => t.to_string(),
            None => first.0.clone(),
        };
        Ok(Tuple { tag, elements })
    }

    /// Convenience for `node: (node: id)`.
    pub fn node(id: impl Into<NodeId>) -> Self {
        Tuple {
            tag: "node".into(),
            elements: vec![("node".into(), Value::Node(id.into()))],
        }
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn elements(&self) -> &[(String, Value)] {
        &self.elements
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.elements.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.elements.iter().map(|(n, _)| n.as_str())
    }

    /// Node references in element order.
    pub fn node_refs(&self) -> impl Iterator<Item = &NodeId> {
        self.elements.iter().filter_map(|(_, v)| v.as_node())
    }

    pub fn first_node(&self) -> Option<&NodeId> {
        self.node_refs().next()
    }

    fn canonical_key(&self) -> (String, Vec<String>, Vec<String>) {
        (
            self.tag.clone(),
            self.elements.iter().map(|(n, _)| n.clone()).collect(),
            self.elements.iter().map(|(_, v)| v.to_string()).collect(),
        )
    }
}

impl fmt::Display for Tuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: (", self.tag)?;
        for (i, (name, value)) in self.elements.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{name}: {value}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TupleSet {
    tuples: BTreeSet<Tuple>,
}

impl TupleSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns false when the tuple was already present.
    pub fn insert(&mut self, t: Tuple) -> bool {
        self.tuples.insert(t)
    }

    pub fn contains(&self, t: &Tuple) -> bool {
        self.tuples.contains(t)
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Tuple> {
        self.tuples.iter()
    }

    pub fn with_tag<'a>(&'a self, tag: &'a str) -> impl Iterator<Item = &'a Tuple> + 'a {
        self.tuples.iter().filter(move |t| t.tag == tag)
    }

    pub fn union(&self, other: &TupleSet) -> TupleSet {
        let mut out = self.clone();
        out.tuples.extend(other.tuples.iter().cloned());
        out
    }

    /// `self` minus every tuple in any of `rest`.
    pub fn subtract<'a>(&self, rest: impl IntoIterator<Item = &'a TupleSet>) -> TupleSet {
        let rest: Vec<&TupleSet> = rest.into_iter().collect();
        self.tuples
            .iter()
            .filter(|t| !rest.iter().any(|r| r.contains(t)))
            .cloned()
            .collect()
    }

    pub fn is_subset(&self, other: &TupleSet) -> bool {
        self.tuples.is_subset(&other.tuples)
    }

    /// Tuples in canonical order: tag, element names, value renderings.
    pub fn canonical(&self) -> Vec<&Tuple> {
        let mut v: Vec<&Tuple> = self.tuples.iter().collect();
        v.sort_by_cached_key(|t| t.canonical_key());
        v
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for t in self.canonical() {
            out.push_str(&t.to_string());
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<TupleSet, SyntaxError> {
        let mut set = TupleSet::new();
        for (i, line) in text.lines().enumerate() {
            let mut p = LineParser { line: i + 1, src: line, pos: 0 };
            p.skip_ws();
            if p.at_end() {
                continue;
            }
            set.insert(p.tuple()?);
        }
        Ok(set)
    }
}

impl FromIterator<Tuple> for TupleSet {
    fn from_iter<I: IntoIterator<Item = Tuple>>(iter: I) -> Self {
        TupleSet { tuples: iter.into_iter().collect() }
    }
}

impl Extend<Tuple> for TupleSet {
    fn extend<I: IntoIterator<Item = Tuple>>(&mut self, iter: I) {
        self.tuples.extend(iter)
    }
}

impl IntoIterator for TupleSet {
    type Item = Tuple;
    type IntoIter = std::collections::btree_set::IntoIter<Tuple>;

    fn into_iter(self) -> Self::IntoIter {
        self.tuples.into_iter()
    }
}

impl<'a> IntoIterator for &'a TupleSet {
    type Item = &'a Tuple;
    type IntoIter = std::collections::btree_set::Iter<'a, Tuple>;

    fn into_iter(self) -> Self::IntoIter {
        self.tuples.iter()
    }
}

pub fn union(a: &TupleSet, b: &TupleSet) -> TupleSet {
    a.union(b)
}

pub fn subtract(first: &TupleSet, rest: &[TupleSet]) -> TupleSet {
    first.subtract(rest)
}

struct LineParser<'a> {
    line: usize,
    src: &'a str,
    pos: usize,
}

impl<'a> LineParser<'a> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, SyntaxError> {
        Err(SyntaxError {
            line: self.line,
            column: self.src[..self.pos].chars().count() + 1,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
    }

    fn expect(&mut self, want: char) -> Result<(), SyntaxError> {
        self.skip_ws();
        match self.peek() {
            Some(c) if c == want => {
                self.bump();
                Ok(())
            }
            Some(c) => self.err(format!("expected `{want}`, found `{c}`")),
            None => self.err(format!("expected `{want}`, found end of line")),
        }
    }

    fn ident(&mut self) -> Result<String, SyntaxError> {
        self.skip_ws();
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
            self.bump();
        }
        let word = &self.src[start..self.pos];
        if !is_identifier(word) {
            self.pos = start;
            return self.err("expected identifier");
        }
        Ok(word.to_string())
    }

    /// `tag: (elements)` or an untagged `(elements)`.
    fn tuple(&mut self) -> Result<Tuple, SyntaxError> {
        self.skip_ws();
        let start = self.pos;
        let tag = if self.peek() == Some('(') {
            None
        } else {
            let t = self.ident()?;
            self.expect(':')?;
            Some(t)
        };
        self.expect('(')?;
        let mut elements = Vec::new();
        loop {
            let name = self.ident()?;
            self.expect(':')?;
            self.skip_ws();
            let value = self.value()?;
            elements.push((name, value));
            self.skip_ws();
            match self.bump() {
                Some(',') => continue,
                Some(')') => break,
                _ => return self.err("expected `,` or `)`"),
            }
        }
        self.skip_ws();
        if !self.at_end() {
            return self.err("trailing input after tuple");
        }
        Tuple::new(tag.as_deref(), elements).or_else(|e| {
            self.pos = start;
            self.err(e.to_string())
        })
    }

    fn value(&mut self) -> Result<Value, SyntaxError> {
        match self.peek() {
            Some('"') => self.string().map(Value::Text),
            Some(c) if c == '-' || c.is_ascii_digit() => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                let start = self.pos;
                while matches!(self.peek(), Some(c) if !c.is_whitespace() && c != ',' && c != ')') {
                    self.bump();
                }
                let raw = &self.src[start..self.pos];
                match NodeId::parse(raw) {
                    Some(id) => Ok(Value::Node(id)),
                    None => {
                        self.pos = start;
                        self.err(format!("malformed node id `{raw}`"))
                    }
                }
            }
            _ => self.err("expected a value"),
        }
    }

    fn number(&mut self) -> Result<Value, SyntaxError> {
        let start = self.pos;
        self.bump();
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '.' || c == '+' || c == '-')
        {
            self.bump();
        }
        let raw = &self.src[start..self.pos];
        let parsed = if raw.contains(['.', 'e', 'E']) {
            raw.parse::<f64>().ok().and_then(|v| Value::real(v).ok())
        } else {
            raw.parse::<i64>().ok().map(Value::Int)
        };
        match parsed {
            Some(v) => Ok(v),
            None => {
                self.pos = start;
                self.err(format!("malformed number `{raw}`"))
            }
        }
    }

    fn string(&mut self) -> Result<String, SyntaxError> {
        self.bump();
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return self.err("unterminated string"),
                Some('"') => return Ok(out),
                Some('\\') => match self.bump() {
                    Some('"') => out.push('"'),
                    Some('\\') => out.push('\\'),
                    Some('n') => out.push('\n'),
                    Some('r') => out.push('\r'),
                    Some('t') => out.push('\t'),
                    Some('u') => {
                        if self.bump() != Some('{') {
                            return self.err("expected `{` after \\u");
                        }
                        let start = self.pos;
                        while matches!(self.peek(), Some(c) if c.is_ascii_hexdigit()) {
                            self.bump();
                        }
                        let hex = &self.src[start..self.pos];
                        if self.bump() != Some('}') {
                            return self.err("expected `}` closing \\u escape");
                        }
                        match u32::from_str_radix(hex, 16).ok().and_then(char::from_u32) {
                            Some(c) => out.push(c),
                            None => return self.err("invalid unicode escape"),
                        }
                    }
                    _ => return self.err("unknown escape"),
                },
                Some(c) => out.push(c),
            }
        }
    }
}
