use super::{Node, NodeKind};

const INDENT: &str = "    ";

/// Canonical source text for a file root.
pub fn print_file(root: &Node) -> String {
    let mut out = String::new();
    print_decl(root, 0, &mut out);
    out
}

/// Canonical text of any node; statements and declarations end with a newline.
pub fn print_node(node: &Node) -> String {
    let mut out = String::new();
    match node.kind {
        NodeKind::Module | NodeKind::Class | NodeKind::Method | NodeKind::NameImport => {
            print_decl(node, 0, &mut out)
        }
        k if k.is_statement() => print_statement(node, 0, &mut out),
        NodeKind::Block => print_block(node, 0, &mut out),
        NodeKind::Parameter => out.push_str(node.name.as_deref().unwrap_or("")),
        _ => out.push_str(&expr(node)),
    }
    out
}

fn indent(depth: usize, out: &mut String) {
    for _ in 0..depth {
        out.push_str(INDENT);
    }
}

fn name(n: &Node) -> &str {
    n.name.as_deref().unwrap_or("")
}

fn print_decl(node: &Node, depth: usize, out: &mut String) {
    indent(depth, out);
    match node.kind {
        NodeKind::Module | NodeKind::Class => {
            let kw = if node.kind == NodeKind::Module { "module" } else { "class" };
            out.push_str(&format!("{kw} {} {{\n", name(node)));
            let mut prev: Option<NodeKind> = None;
            for child in node.children() {
                let both_imports = prev == Some(NodeKind::NameImport) && child.kind == NodeKind::NameImport;
                if prev.is_some() && !both_imports {
                    out.push('\n');
                }
                print_decl(child, depth + 1, out);
                prev = Some(child.kind);
            }
            indent(depth, out);
            out.push_str("}\n");
        }
        NodeKind::NameImport => {
            let target = node.children().next().and_then(|r| r.dotted_name()).unwrap_or_default();
            out.push_str(&format!("import {target};\n"));
        }
        NodeKind::Method => {
            let params: Vec<&str> = node.parameters().map(name).collect();
            out.push_str(&format!("{}({}) ", name(node), params.join(", ")));
            let body = node.body().expect("method body");
            print_block(body, depth, out);
            out.push('\n');
        }
        _ => unreachable!("not a declaration: {:?}", node.kind),
    }
}

/// Prints `{ ... }` starting at the current column; no trailing newline.
fn print_block(block: &Node, depth: usize, out: &mut String) {
    if block.children.is_empty() {
        out.push_str("{}");
        return;
    }
    out.push_str("{\n");
    for stmt in block.children() {
        print_statement(stmt, depth + 1, out);
    }
    indent(depth, out);
    out.push('}');
}

fn print_statement(stmt: &Node, depth: usize, out: &mut String) {
    indent(depth, out);
    print_statement_inline(stmt, depth, out);
    out.push('\n');
}

fn print_statement_inline(stmt: &Node, depth: usize, out: &mut String) {
    let mut kids = stmt.children();
    match stmt.kind {
        NodeKind::DeclarationStatement => {
            let value = kids.next().map(expr).unwrap_or_default();
            out.push_str(&format!("var {} = {value};", name(stmt)));
        }
        NodeKind::ExpressionStatement => {
            out.push_str(&kids.next().map(expr).unwrap_or_default());
            out.push(';');
        }
        NodeKind::ReturnStatement => match kids.next() {
            Some(v) => out.push_str(&format!("return {};", expr(v))),
            None => out.push_str("return;"),
        },
        NodeKind::PrintStatement => {
            let args: Vec<String> = kids.map(expr).collect();
            out.push_str(&format!("print({});", args.join(", ")));
        }
        NodeKind::LoopStatement => {
            let cond = kids.next().map(expr).unwrap_or_default();
            out.push_str(&format!("while ({cond}) "));
            print_block(kids.next().expect("loop body"), depth, out);
        }
        NodeKind::IfStatement => {
            let cond = kids.next().map(expr).unwrap_or_default();
            out.push_str(&format!("if ({cond}) "));
            print_block(kids.next().expect("then block"), depth, out);
            if let Some(else_block) = kids.next() {
                out.push_str(" else ");
                print_block(else_block, depth, out);
            }
        }
        k => unreachable!("not a statement: {k:?}"),
    }
}

fn precedence(op: &str) -> u8 {
    match op {
        "=" => 0,
        "||" => 1,
        "&&" => 2,
        "==" | "!=" => 3,
        "<" | "<=" | ">" | ">=" => 4,
        "+" | "-" => 5,
        _ => 6,
    }
}

fn expr(e: &Node) -> String {
    match e.kind {
        NodeKind::IntLiteral => e.token.clone().unwrap_or_default(),
        NodeKind::StringLiteral => quote(e.token.as_deref().unwrap_or("")),
        NodeKind::ReferenceExpression => e.dotted_name().unwrap_or_default(),
        NodeKind::CallExpression => {
            let mut kids = e.children();
            let callee = kids.next().and_then(|c| c.dotted_name()).unwrap_or_default();
            let args: Vec<String> = kids.map(expr).collect();
            format!("{callee}({})", args.join(", "))
        }
        NodeKind::BinaryExpression => {
            let op = e.token.as_deref().unwrap_or("");
            let prec = precedence(op);
            let mut kids = e.children();
            let (lhs, rhs) = (kids.next().expect("lhs"), kids.next().expect("rhs"));
            let wrap = |n: &Node, strict: bool| {
                let inner = expr(n);
                let child_prec = match n.kind {
                    NodeKind::BinaryExpression => precedence(n.token.as_deref().unwrap_or("")),
                    _ => u8::MAX,
                };
                if child_prec < prec || (strict && child_prec == prec) {
                    format!("({inner})")
                } else {
                    inner
                }
            };
            format!("{} {op} {}", wrap(lhs, false), wrap(rhs, true))
        }
        _ => String::new(),
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}
