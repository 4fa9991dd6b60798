//! External script queries.
//!
//! A script is any executable file in the script directory (or a `.py` file,
//! run with `python3`). Each invocation starts one process, writes a single
//! JSON request to its stdin and reads a single JSON response from its
//! stdout. The wire format is documented in `docs/script-protocol.md`.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::mpsc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};
use thiserror::Error;

use crate::engine::{Call, Context, Output, Query, QueryError};
use crate::minilang::{Node, NodeId, Program};
use crate::mutation;
use crate::tuple::{is_identifier, Tuple, TupleSet, Value};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScriptError {
    #[error("cannot start script: {0}")]
    Spawn(String),
    #[error("script exited with {status}: {stderr}")]
    Crash { status: String, stderr: String },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("script timed out after {0:?}")]
    Timeout(Duration),
    #[error("script reported: {0}")]
    Reported(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptQuery {
    pub name: String,
    pub path: PathBuf,
    /// Program and leading arguments; the script path is appended.
    pub interpreter: Vec<String>,
}

/// Scripts in `dir` sorted by name, plus warnings for skipped files.
pub fn discover(dir: &Path) -> (Vec<ScriptQuery>, Vec<String>) {
    let mut found = Vec::new();
    let mut warnings = Vec::new();
    let Ok(entries) = std::fs::read_dir(dir) else {
        return (found, warnings);
    };
    for entry in entries.flatten() {
        let path = entry.path();
        if !path.is_file() {
            continue;
        }
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else { continue };
        if stem.starts_with('.') {
            continue;
        }
        if !is_identifier(stem) {
            warnings.push(format!("skipping {}: name is not an identifier", path.display()));
            continue;
        }
        let interpreter = if path.extension().is_some_and(|e| e == "py") {
            vec!["python3".to_string()]
        } else {
            match shebang(&path) {
                Ok(Some(cmd)) => cmd,
                Ok(None) => continue,
                Err(e) => {
                    warnings.push(format!("skipping {}: {e}", path.display()));
                    continue;
                }
            }
        };
        found.push(ScriptQuery { name: stem.to_string(), path, interpreter });
    }
    found.sort_by(|a, b| a.name.cmp(&b.name));
    let mut seen = std::collections::HashSet::new();
    found.retain(|s| {
        let fresh = seen.insert(s.name.clone());
        if !fresh {
            warnings.push(format!("skipping {}: another script is named `{}`", s.path.display(), s.name));
        }
        fresh
    });
    (found, warnings)
}

fn shebang(path: &Path) -> std::io::Result<Option<Vec<String>>> {
    let mut head = [0u8; 256];
    let n = std::fs::File::open(path)?.read(&mut head)?;
    let head = String::from_utf8_lossy(&head[..n]);
    Ok(head
        .strip_prefix("#!")
        .and_then(|rest| rest.lines().next())
        .map(|line| line.split_whitespace().map(str::to_string).collect::<Vec<_>>())
        .filter(|cmd| !cmd.is_empty()))
}

#[derive(Serialize, Deserialize)]
struct WireElement {
    name: String,
    kind: String,
    value: Json,
}

#[derive(Serialize, Deserialize)]
struct WireTuple {
    tag: String,
    elements: Vec<WireElement>,
}

fn encode_tuple(t: &Tuple) -> WireTuple {
    let elements = t
        .elements()
        .iter()
        .map(|(name, v)| {
            let (kind, value) = match v {
                Value::Text(s) => ("string", json!(s)),
                Value::Int(i) => ("int", json!(i)),
                Value::Real(r) => ("real", json!(r.get())),
                Value::Node(id) => ("node", json!(id.as_str())),
            };
            WireElement { name: name.clone(), kind: kind.to_string(), value }
        })
        .collect();
    WireTuple { tag: t.tag().to_string(), elements }
}

/// JSON array of tuples in canonical order.
pub fn encode_tuple_set(ts: &TupleSet) -> Json {
    serde_json::to_value(ts.canonical().into_iter().map(encode_tuple).collect::<Vec<_>>()).expect("plain data")
}

fn decode_tuple(w: WireTuple) -> Result<Tuple, ScriptError> {
    let bad = |m: String| ScriptError::Protocol(m);
    let mut elements = Vec::with_capacity(w.elements.len());
    for e in w.elements {
        let value = match (e.kind.as_str(), &e.value) {
            ("string", Json::String(s)) => Value::text(s.as_str()),
            ("int", Json::Number(n)) => Value::Int(n.as_i64().ok_or_else(|| bad(format!("`{}` is not a 64-bit integer", n)))?),
            ("real", Json::Number(n)) => {
                Value::real(n.as_f64().ok_or_else(|| bad(format!("`{n}` is not a real")))?).map_err(|e| bad(e.to_string()))?
            }
            ("node", Json::String(s)) => {
                Value::Node(NodeId::parse(s).ok_or_else(|| bad(format!("`{s}` is not a node id")))?)
            }
            (kind, v) => return Err(bad(format!("element `{}`: kind `{kind}` with value {v}", e.name))),
        };
        elements.push((e.name, value));
    }
    Tuple::new(Some(w.tag.as_str()), elements).map_err(|e| bad(e.to_string()))
}

/// Tuples in the order they appear in the array.
pub fn decode_tuples(json: &Json) -> Result<Vec<Tuple>, ScriptError> {
    let wire: Vec<WireTuple> =
        serde_json::from_value(json.clone()).map_err(|e| ScriptError::Protocol(format!("bad tuple list: {e}")))?;
    wire.into_iter().map(decode_tuple).collect()
}

pub fn decode_tuple_set(json: &Json) -> Result<TupleSet, ScriptError> {
    Ok(decode_tuples(json)?.into_iter().collect())
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScriptRequest {
    pub context: Option<NodeId>,
    pub args: Vec<String>,
    /// `None` when no upstream query feeds the script.
    pub input: Option<TupleSet>,
}

#[derive(Serialize)]
struct WireSpan<'a> {
    file: &'a str,
    #[serde(rename = "startLine")]
    start_line: usize,
    #[serde(rename = "startCol")]
    start_col: usize,
    #[serde(rename = "endLine")]
    end_line: usize,
    #[serde(rename = "endCol")]
    end_col: usize,
}

#[derive(Serialize)]
struct WireNode<'a> {
    id: &'a str,
    kind: &'static str,
    name: Option<&'a str>,
    #[serde(rename = "parentId")]
    parent_id: Option<&'a str>,
    span: WireSpan<'a>,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    context: Option<&'a str>,
    args: &'a [String],
    input: Option<Json>,
    #[serde(rename = "astSummary")]
    ast_summary: Vec<WireNode<'a>>,
}

fn summary_entry<'a>(program: &'a Program, n: &'a Node) -> WireNode<'a> {
    WireNode {
        id: n.id.as_str(),
        kind: n.kind.name(),
        name: n.name.as_deref(),
        parent_id: program.parent(&n.id).map(|p| p.id.as_str()),
        span: WireSpan {
            file: &n.span.file,
            start_line: n.span.start.line,
            start_col: n.span.start.col,
            end_line: n.span.end.line,
            end_col: n.span.end.col,
        },
    }
}

/// The request document: one line of compact JSON followed by a newline.
pub fn encode_request(req: &ScriptRequest, program: &Program) -> String {
    let wire = WireRequest {
        context: req.context.as_ref().map(NodeId::as_str),
        args: &req.args,
        input: req.input.as_ref().map(encode_tuple_set),
        ast_summary: program.nodes().map(|n| summary_entry(program, n)).collect(),
    };
    let mut s = serde_json::to_string(&wire).expect("plain data");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScriptResponse {
    /// In the order the script listed them.
    pub output: Vec<Tuple>,
    pub error: Option<String>,
    pub warnings: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WireResponse {
    #[serde(default)]
    output: Option<Json>,
    #[serde(default)]
    error: Option<String>,
    #[serde(default)]
    warnings: Vec<String>,
}

pub fn decode_response(bytes: &[u8]) -> Result<ScriptResponse, ScriptError> {
    let wire: WireResponse =
        serde_json::from_slice(bytes).map_err(|e| ScriptError::Protocol(format!("bad response document: {e}")))?;
    let output = match (&wire.output, &wire.error) {
        (Some(o), _) => decode_tuples(o)?,
        (None, Some(_)) => Vec::new(),
        (None, None) => return Err(ScriptError::Protocol("response has neither output nor error".into())),
    };
    Ok(ScriptResponse { output, error: wire.error, warnings: wire.warnings })
}

impl ScriptQuery {
    /// Runs the script once. The request is written from a separate thread
    /// while stdout is drained, so neither pipe can fill up and stall.
    pub fn invoke(&self, request: &str, timeout: Duration) -> Result<ScriptResponse, ScriptError> {
        let (program, lead) = self.interpreter.split_first().ok_or_else(|| ScriptError::Spawn("empty interpreter".into()))?;
        let mut child = Command::new(program)
            .args(lead)
            .arg(&self.path)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| ScriptError::Spawn(format!("{program}: {e}")))?;

        let mut stdin = child.stdin.take().expect("piped");
        let request = request.as_bytes().to_vec();
        let writer = std::thread::spawn(move || {
            // A script may exit without reading everything; a broken pipe is its business.
            let _ = stdin.write_all(&request);
        });
        let mut stderr = child.stderr.take().expect("piped");
        let err_reader = std::thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = stderr.read_to_end(&mut buf);
            buf
        });
        let mut stdout = child.stdout.take().expect("piped");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            let mut buf = Vec::new();
            let res = stdout.read_to_end(&mut buf).map(|_| buf);
            let _ = tx.send(res);
        });

        let out = match rx.recv_timeout(timeout) {
            Ok(Ok(buf)) => buf,
            Ok(Err(e)) => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(ScriptError::Protocol(format!("reading script output: {e}")));
            }
            Err(_) => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(ScriptError::Timeout(timeout));
            }
        };
        let status = child.wait().map_err(|e| ScriptError::Spawn(e.to_string()))?;
        let _ = writer.join();
        let stderr = err_reader.join().unwrap_or_default();
        if !status.success() {
            return Err(ScriptError::Crash {
                status: status.to_string(),
                stderr: String::from_utf8_lossy(&stderr).trim().to_string(),
            });
        }
        decode_response(&out)
    }
}

impl Query for ScriptQuery {
    fn run(&self, call: Call<'_>, ctx: &mut Context) -> Result<Output, QueryError> {
        let req = ScriptRequest { context: ctx.focus.clone(), args: call.args.to_vec(), input: call.input().cloned() };
        let text = encode_request(&req, &ctx.program);
        let resp = self.invoke(&text, ctx.script_timeout)?;
        if let Some(e) = resp.error {
            return Err(ScriptError::Reported(e).into());
        }
        let (edits, rest): (Vec<Tuple>, Vec<Tuple>) = resp.output.into_iter().partition(|t| t.tag() == "edit");
        if !edits.is_empty() {
            let plan = edits_to_insertions(&ctx.program, &edits)?;
            mutation::apply_insertions(ctx, plan)?;
        }
        Ok(Output { tuples: rest.into_iter().collect(), plan: None, warnings: resp.warnings })
    }
}

/// `edit:(op: "insertPrintFront", node: M, a0, a1, ...)` becomes one
/// `print(a0, a1, ...)` for method M. Text values print as string literals,
/// node values as references to the node's name. Statements for one method
/// keep the order in which the script listed them.
fn edits_to_insertions(program: &Program, edits: &[Tuple]) -> Result<Vec<(NodeId, Vec<Node>)>, ScriptError> {
    let bad = |m: String| ScriptError::Protocol(m);
    let mut out: Vec<(NodeId, Vec<Node>)> = Vec::new();
    for t in edits {
        match t.get("op") {
            Some(Value::Text(op)) if op == "insertPrintFront" => {}
            other => return Err(bad(format!("unsupported edit op {other:?}"))),
        }
        let method = t.get("node").and_then(Value::as_node).ok_or_else(|| bad(format!("edit without node: {t}")))?;
        let mut args = Vec::new();
        for (name, v) in t.elements().iter().filter(|(n, _)| n != "op" && n != "node") {
            args.push(match v {
                Value::Text(s) => Node::string_literal(s),
                Value::Node(id) => {
                    let target = program.node(id).ok_or_else(|| bad(format!("edit refers to unknown node {id}")))?;
                    let name = target.name.as_deref().ok_or_else(|| bad(format!("node {id} has no name")))?;
                    Node::reference(name)
                }
                other => return Err(bad(format!("edit argument `{name}` cannot be printed: {other}"))),
            });
        }
        let stmt = Node::print_statement(args);
        match out.iter_mut().find(|(m, _)| m == method) {
            Some((_, stmts)) => stmts.push(stmt),
            None => out.push((method.clone(), vec![stmt])),
        }
    }
    Ok(out)
}
