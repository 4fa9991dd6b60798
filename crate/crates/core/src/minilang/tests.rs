use super::*;
use proptest::prelude::*;

const REST: &str =
    "module a { class P { rest() { watchTV(); sleep(); } sleep() { dream(); } watchTV(){} dream(){} } }";

fn rest_program() -> Program {
    Program::parse(&[("P.mini", REST)]).unwrap()
}

fn corpus() -> Vec<(String, String)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/corpus");
    read_sources(&dir).unwrap()
}

fn id(s: &str) -> NodeId {
    NodeId::from(s)
}

#[test]
fn parses_four_methods() {
    let p = rest_program();
    let methods: Vec<&str> = p
        .nodes_of_kind(NodeKind::Method, None)
        .iter()
        .map(|m| m.id.as_str())
        .collect();
    assert_eq!(methods, ["a.P.rest", "a.P.sleep", "a.P.watchTV", "a.P.dream"]);
    assert_eq!(p.nodes_of_kind(NodeKind::Module, None).len(), 1);
}

#[test]
fn empty_source_list() {
    let p = Program::parse::<&str, &str>(&[]).unwrap();
    assert_eq!(p.roots().count(), 0);
    assert!(p.pretty_print().is_empty());
}

#[test]
fn parse_error_points_at_brace() {
    let e = Program::parse(&[("x.mini", "module a { class { } }")]).unwrap_err();
    assert_eq!((e.file.as_str(), e.line, e.column), ("x.mini", 1, 18));
    assert!(e.message.contains("expected identifier"), "{e}");
}

#[test]
fn parse_errors() {
    for bad in [
        "class P {}",
        "module a {",
        "module a { class P { m() { x = ; } } }",
        "module a { class P { m(x, x) {} } }",
        "module a { class P { m() {} m() {} } }",
        "module a { class P { m() { print(\"open); } } }",
        "module a {} module b {}",
        "module a { class P { m() { var x = 99999999999999999999; } } }",
    ] {
        assert!(Program::parse(&[("x.mini", bad)]).is_err(), "{bad}");
    }
    let dup = Program::parse(&[("x.mini", "module a {}"), ("y.mini", "module a {}")]);
    assert!(dup.unwrap_err().message.contains("duplicate"));
}

#[test]
fn statement_ids_follow_roles() {
    let src = "module pkg { class A { m(x) { var y = 1; print(y); if (x) { y = 2; } else { return y; } } } }";
    let p = Program::parse(&[("A.mini", src)]).unwrap();
    for (path, kind) in [
        ("pkg.A.m", NodeKind::Method),
        ("pkg.A.m/param[0]", NodeKind::Parameter),
        ("pkg.A.m/body", NodeKind::Block),
        ("pkg.A.m/body[0]", NodeKind::DeclarationStatement),
        ("pkg.A.m/body[2]", NodeKind::IfStatement),
        ("pkg.A.m/body[2]/cond", NodeKind::ReferenceExpression),
        ("pkg.A.m/body[2]/then[0]", NodeKind::ExpressionStatement),
        ("pkg.A.m/body[2]/else[0]", NodeKind::ReturnStatement),
        ("pkg.A.m/body[1]/arg[0]", NodeKind::ReferenceExpression),
    ] {
        assert_eq!(p.resolve(&id(path)).unwrap().kind, kind, "{path}");
    }
}

#[test]
fn resolve_examples() {
    let p = rest_program();
    assert_eq!(p.resolve(&id("a.P.rest")).unwrap().kind, NodeKind::Method);
    assert_eq!(p.resolve(&id("a")).unwrap().kind, NodeKind::Module);
    assert_eq!(
        p.resolve(&id("zz.Nope")).unwrap_err(),
        ProgramError::UnknownNodeId("zz.Nope".into())
    );
}

#[test]
fn every_node_resolves_to_itself() {
    let p = Program::parse(&corpus()).unwrap();
    for n in p.nodes() {
        assert!(NodeId::parse(n.id.as_str()).is_some(), "{}", n.id);
        assert!(std::ptr::eq(p.resolve(&n.id).unwrap(), n));
    }
}

#[test]
fn node_id_syntax() {
    assert!(NodeId::parse("a.P.m/body[2]/then[0]").is_some());
    assert!(NodeId::parse("a").is_some());
    for bad in ["", "a..b", "a/", "a/b[", "a/b[x]", "1a", "a/b[]"] {
        assert!(NodeId::parse(bad).is_none(), "{bad}");
    }
}

#[test]
fn scoped_statement_query() {
    let p = rest_program();
    let rest = p.resolve(&id("a.P.rest")).unwrap();
    let stmts = p.nodes_of_kind(KindFilter::Statement, Some(rest));
    assert_eq!(stmts.len(), 2);
    assert!(stmts.iter().all(|s| s.kind == NodeKind::ExpressionStatement));
}

#[test]
fn qualified_names() {
    let p = rest_program();
    assert_eq!(p.qualified_name(p.resolve(&id("a.P.rest")).unwrap()).unwrap(), "a.P.rest");
    assert_eq!(p.qualified_name(p.resolve(&id("a")).unwrap()).unwrap(), "a");
    let stmt = p.resolve(&id("a.P.rest/body[0]")).unwrap();
    assert!(matches!(p.qualified_name(stmt), Err(ProgramError::NotADeclaration(_))));
}

#[test]
fn spans_nest_and_siblings_are_ordered() {
    let p = Program::parse(&corpus()).unwrap();
    for n in p.nodes() {
        let mut prev_end: Option<Pos> = None;
        for c in n.children() {
            assert!(n.span.start <= c.span.start && c.span.end <= n.span.end, "{}", c.id);
            if let Some(end) = prev_end {
                assert!(end <= c.span.start, "{} overlaps its previous sibling", c.id);
            }
            prev_end = Some(c.span.end);
        }
    }
}

#[test]
fn method_source_reparses_to_same_method() {
    let p = Program::parse(&corpus()).unwrap();
    for m in p.nodes_of_kind(NodeKind::Method, None) {
        let file = p.file_of(m).unwrap();
        let text = &file.text[m.span.start.offset..m.span.end.offset];
        let class = p.parent(&m.id).unwrap();
        let module = p.parent(&class.id).unwrap();
        assert_eq!(module.kind, NodeKind::Module);
        let wrapped = format!(
            "module {} {{ class {} {{ {text} }} }}",
            module.id,
            class.name.as_deref().unwrap()
        );
        let again = Program::parse(&[("m.mini", wrapped)]).unwrap();
        assert!(again.resolve(&m.id).unwrap().same_shape(m), "{}", m.id);
    }
}

#[test]
fn print_parse_fixpoint_on_corpus() {
    let first = Program::parse(&corpus()).unwrap();
    let printed = first.pretty_print();
    let second = Program::parse(&printed).unwrap();
    assert!(first.same_shape(&second));
    assert_eq!(second.pretty_print(), printed);
}

#[test]
fn printer_keeps_precedence() {
    let src = "module a { class C { m(a, b) { return (a + b) * (a - (b - 1)) / -2 == 0 || a && b; } } }";
    let p = Program::parse(&[("c.mini", src)]).unwrap();
    let q = Program::parse(&p.pretty_print()).unwrap();
    assert!(p.same_shape(&q));
    let text = &q.pretty_print()[0].1;
    assert!(text.contains("return (a + b) * (a - (b - 1)) / -2 == 0 || a && b;"), "{text}");
}

#[test]
fn reparse_gives_identical_ids() {
    let a = Program::parse(&corpus()).unwrap();
    let b = Program::parse(&corpus()).unwrap();
    let ids_a: Vec<&NodeId> = a.nodes().map(|n| &n.id).collect();
    let ids_b: Vec<&NodeId> = b.nodes().map(|n| &n.id).collect();
    assert_eq!(ids_a, ids_b);
}

#[test]
fn innermost_node_at_position() {
    let p = Program::parse(&corpus()).unwrap();
    let n = p.node_at("Main.mini", 7, 13).unwrap();
    assert_eq!(n.id.as_str(), "a.P.rest/body[0]/expr/callee");
    let n = p.node_at("Main.mini", 6, 9).unwrap();
    assert_eq!(n.id.as_str(), "a.P.rest");
    assert!(p.node_at("Main.mini", 1, 1).is_none());
    assert!(p.node_at("Nope.mini", 1, 1).is_none());
}

fn arg_prints(method: &Node) -> Vec<Node> {
    let mut out = vec![Node::print_statement(vec![Node::string_literal(method.name.as_deref().unwrap())])];
    for param in method.parameters() {
        let name = param.name.as_deref().unwrap();
        out.push(Node::print_statement(vec![Node::string_literal(name), Node::reference(name)]));
    }
    out
}

#[test]
fn insert_into_method_head() {
    let p = rest_program();
    let dream = id("a.P.dream");
    let before = p.resolve(&dream).unwrap().body().unwrap().children.len();
    let q = p
        .insert_statements(&dream, vec![Node::print_statement(vec![Node::string_literal("dream")])])
        .unwrap();
    let body = q.resolve(&dream).unwrap().body().unwrap();
    assert_eq!(body.children.len(), before + 1);
    assert_eq!(body.children[0].kind, NodeKind::PrintStatement);
    assert_eq!(body.children[0].id.as_str(), "a.P.dream/body[0]");
    let printed = print_file(&q.files()[0].root);
    assert!(printed.contains("dream() {\n            print(\"dream\");\n        }"), "{printed}");
}

#[test]
fn insert_rejects_non_methods() {
    let p = rest_program();
    let stmt = vec![Node::print_statement(vec![])];
    assert!(matches!(
        p.insert_statements(&id("a.P"), stmt.clone()),
        Err(ProgramError::NotAMethod(_))
    ));
    assert!(matches!(
        p.insert_statements(&id("a.P.rest"), vec![Node::string_literal("x")]),
        Err(ProgramError::NotAStatement(_))
    ));
    assert!(matches!(p.insert_statements(&id("no.such"), stmt), Err(ProgramError::UnknownNodeId(_))));
}

#[test]
fn insertion_keeps_unrelated_ids_and_reparses() {
    let p = Program::parse(&corpus()).unwrap();
    let target = id("b.R.fact");
    let stmts = arg_prints(p.resolve(&target).unwrap());
    let q = p.insert_statements(&target, stmts).unwrap();
    let outside = |prog: &Program| -> Vec<NodeId> {
        prog.nodes()
            .map(|n| n.id.clone())
            .filter(|i| !i.as_str().starts_with("b.R.fact/"))
            .collect()
    };
    assert_eq!(outside(&p), outside(&q));
    let reparsed = Program::parse(&q.pretty_print()).unwrap();
    assert!(reparsed.same_shape(&q));
    let text = &q.pretty_print()[1].1;
    assert!(text.contains("fact(n) {\n            print(\"fact\");\n            print(\"n\", n);\n"), "{text}");
}

proptest! {
    #[test]
    fn inserted_statements_lead_the_body(n in 1usize..=5) {
        let p = rest_program();
        let m = id("a.P.rest");
        let stmts: Vec<Node> = (0..n)
            .map(|i| Node::print_statement(vec![Node::string_literal(&format!("s{i}"))]))
            .collect();
        let q = p.insert_statements(&m, stmts).unwrap();
        let body = q.resolve(&m).unwrap().body().unwrap();
        prop_assert_eq!(body.children.len(), n + 2);
        for (i, s) in body.children.iter().take(n).enumerate() {
            prop_assert_eq!(s.kind, NodeKind::PrintStatement);
            let lit = s.children[0].token.clone().unwrap();
            prop_assert_eq!(lit, format!("s{i}"));
        }
        prop_assert_eq!(body.children[n].kind, NodeKind::ExpressionStatement);
    }
}
