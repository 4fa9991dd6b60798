//! Program edits that write back to the corpus.

use std::path::Path;

use crate::engine::{Context, QueryError};
use crate::minilang::{print_node, Node, NodeId, NodeKind, Program};

/// `print("m");` followed by `print("p", p);` for each parameter `p`.
pub fn arg_printing_statements(method: &Node) -> Vec<Node> {
    let mut out = vec![Node::print_statement(vec![Node::string_literal(method.name.as_deref().unwrap_or(""))])];
    for p in method.parameters() {
        let name = p.name.as_deref().unwrap_or("");
        out.push(Node::print_statement(vec![Node::string_literal(name), Node::reference(name)]));
    }
    out
}

/// Prepends statements to methods, rewrites the touched files and reloads
/// the program. Either every file is replaced or none is.
///
/// Only the text of each edited method is regenerated; the rest of the file,
/// comments included, stays as written.
pub fn apply_insertions(ctx: &mut Context, edits: Vec<(NodeId, Vec<Node>)>) -> Result<(), QueryError> {
    for (id, _) in &edits {
        match ctx.program.node(id) {
            Some(n) if n.kind == NodeKind::Method => {}
            _ => return Err(QueryError::NotAMethodNode(id.to_string())),
        }
    }
    let mut edited = ctx.program.clone();
    for (id, stmts) in &edits {
        edited = edited.insert_statements(id, stmts.clone()).map_err(|e| QueryError::Other(e.to_string()))?;
    }

    let mut sources: Vec<(String, String)> = Vec::new();
    let mut changed = Vec::new();
    for file in ctx.program.files() {
        let mut methods: Vec<&Node> = edits
            .iter()
            .filter_map(|(id, _)| ctx.program.node(id))
            .filter(|m| *m.span.file == *file.path)
            .collect();
        if methods.is_empty() {
            sources.push((file.path.clone(), file.text.clone()));
            continue;
        }
        methods.sort_by_key(|m| std::cmp::Reverse(m.span.start.offset));
        methods.dedup_by_key(|m| m.span.start.offset);
        let mut text = file.text.clone();
        for m in methods {
            let new_method = edited.node(&m.id).expect("edited program keeps method ids");
            let line_start = text[..m.span.start.offset].rfind('\n').map_or(0, |i| i + 1);
            let indent: String =
                text[line_start..m.span.start.offset].chars().take_while(|c| c.is_whitespace()).collect();
            let printed = print_node(new_method);
            let body = printed
                .trim_end_matches('\n')
                .lines()
                .enumerate()
                .map(|(i, l)| if i == 0 || l.is_empty() { l.to_string() } else { format!("{indent}{l}") })
                .collect::<Vec<_>>()
                .join("\n");
            text.replace_range(m.span.start.offset..m.span.end.offset, &body);
        }
        changed.push((file.path.clone(), text.clone()));
        sources.push((file.path.clone(), text));
    }

    let reparsed = Program::parse(&sources).map_err(|e| QueryError::Other(format!("edited code does not parse: {e}")))?;
    if let Some(dir) = &ctx.corpus_dir {
        write_all(dir, &changed)?;
    }
    ctx.program = reparsed;
    Ok(())
}

/// Writes every file to a temporary sibling first, then renames them all.
fn write_all(dir: &Path, files: &[(String, String)]) -> Result<(), QueryError> {
    let fail = |e: std::io::Error, p: &Path| QueryError::WriteFailure(format!("{}: {e}", p.display()));
    let mut staged = Vec::new();
    for (rel, text) in files {
        let target = dir.join(rel);
        let tmp = target.with_file_name(format!(
            ".{}.codeq-tmp",
            target.file_name().and_then(|n| n.to_str()).unwrap_or("file")
        ));
        if let Err(e) = std::fs::write(&tmp, text) {
            for (t, _) in &staged {
                let _ = std::fs::remove_file(t);
            }
            let _ = std::fs::remove_file(&tmp);
            return Err(fail(e, &tmp));
        }
        staged.push((tmp, target));
    }
    for (tmp, target) in &staged {
        std::fs::rename(tmp, target).map_err(|e| fail(e, target))?;
    }
    Ok(())
}
