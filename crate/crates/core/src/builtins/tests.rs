use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use proptest::prelude::*;

use super::*;
use crate::engine::{execute, EngineError, Execution, Renderer};
use crate::history::{History, IssueTracker};
use crate::minilang::{NodeId, NodeKind, Program};
use crate::prompt::{parse_prompt, to_network};
use crate::tuple::{Tuple, TupleSet, Value};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn corpus_ctx() -> Context {
    let mut ctx = Context::new(Program::load_dir(&fixtures().join("corpus")).unwrap());
    ctx.history = Some(History::open(&fixtures().join("history")).unwrap());
    ctx.issues = Some(IssueTracker::load(&fixtures().join("issues.json")).unwrap());
    ctx.work_dir = fixtures();
    ctx
}

fn src_ctx(src: &str) -> Context {
    Context::new(Program::parse(&[("t.mini", src)]).unwrap())
}

fn focus(mut ctx: Context, id: &str) -> Context {
    ctx.focus = Some(NodeId::from(id));
    ctx
}

fn run(ctx: &mut Context, prompt: &str) -> Result<Execution, EngineError> {
    execute(&to_network(&parse_prompt(prompt).unwrap()), &registry(), ctx)
}

fn out(ctx: &mut Context, prompt: &str) -> TupleSet {
    run(ctx, prompt).unwrap().sinks.remove(0).output
}

fn query_err(ctx: &mut Context, prompt: &str) -> QueryError {
    match run(ctx, prompt) {
        Err(EngineError::Query { source, .. }) => source,
        other => panic!("{prompt}: expected a query error, got {other:?}"),
    }
}

fn set(text: &str) -> TupleSet {
    TupleSet::parse(text).unwrap()
}

fn nodes(ids: &[&str]) -> TupleSet {
    ids.iter().map(|i| Tuple::node(*i)).collect()
}

const GETTERS: &str = "module p { class Person { getAge() { return 1; } getAddress() { return 2; } setAge(a) {} } }";

const CALLS: &str = "calls: (caller: a.P.rest, callee: a.P.watchTV)\n\
                     calls: (caller: a.P.rest, callee: a.P.sleep)\n\
                     calls: (caller: a.P.sleep, callee: a.P.dream)\n";

#[test]
fn flags_parse_values_and_positionals() {
    let args: Vec<String> = ["-c", "5", "x", "-nodes"].iter().map(|s| s.to_string()).collect();
    let f = Flags::parse(&args, &[flag("c", 1), flag("nodes", 0)], 1).unwrap();
    assert_eq!(f.value("c"), Some("5"));
    assert!(f.has("nodes"));
    assert_eq!(f.positional, ["x"]);
    let spec = [flag("c", 1)];
    let strs = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    assert!(matches!(Flags::parse(&strs(&["-z"]), &spec, 0), Err(QueryError::UnknownFlag(_))));
    assert!(matches!(Flags::parse(&strs(&["-c"]), &spec, 0), Err(QueryError::MissingFlagValue(_))));
    assert!(matches!(Flags::parse(&strs(&["-c", "1", "-c", "2"]), &spec, 0), Err(QueryError::BadArgument(_))));
    assert!(matches!(Flags::parse(&strs(&["x"]), &spec, 0), Err(QueryError::BadArgument(_))));
    // a negative number is a positional, not a flag
    assert_eq!(Flags::parse(&strs(&["-3"]), &spec, 1).unwrap().positional, ["-3"]);
}

#[test]
fn ast_queries() {
    let mut ctx = corpus_ctx();
    assert_eq!(out(&mut ctx, "ast -type Class -global"), nodes(&["a.P", "b.R"]));
    let mut ctx = focus(corpus_ctx(), "a.P.sleep");
    assert_eq!(
        out(&mut ctx, "ast -type Statement -topLevel"),
        nodes(&["a.P.sleep/body[0]", "a.P.sleep/body[1]", "a.P.sleep/body[2]"])
    );
    let mut ctx = focus(corpus_ctx(), "a.P.dream");
    // nested prints are statements but not top-level ones
    assert_eq!(out(&mut ctx, "ast -type Statement").len(), 3);
    assert_eq!(out(&mut ctx, "ast -type Statement -topLevel").len(), 1);
    let mut ctx = src_ctx(GETTERS);
    assert_eq!(out(&mut ctx, "ast -type Method -name ^get"), nodes(&["p.Person.getAge", "p.Person.getAddress"]));
    assert_eq!(query_err(&mut ctx, "ast -type Nope"), QueryError::UnknownKind("Nope".into()));
    assert!(matches!(query_err(&mut ctx, "ast -name ("), QueryError::BadRegex { .. }));
}

#[test]
fn ast_without_focus_searches_everything_and_warns() {
    let mut ctx = src_ctx(GETTERS);
    let run = run(&mut ctx, "ast -type Method").unwrap();
    assert_eq!(run.sinks[0].output.len(), 3);
    assert_eq!(run.warnings.len(), 1);
}

#[test]
fn callgraph_queries() {
    let mut ctx = focus(corpus_ctx(), "a.P.rest");
    assert_eq!(out(&mut ctx, "callgraph"), set(CALLS));
    assert_eq!(out(&mut ctx, "callgraph -nodes"), nodes(&["a.P.rest", "a.P.watchTV", "a.P.sleep", "a.P.dream"]));
    // a statement inside rest works as context too
    let mut ctx = focus(corpus_ctx(), "a.P.rest/body[1]");
    assert_eq!(out(&mut ctx, "callgraph").len(), 3);
    let mut ctx = src_ctx("module m { class C { loop() { loop(); } other() {} } }");
    let g = out(&mut ctx, "callgraph -global");
    assert_eq!(g, set("calls: (caller: m.C.loop, callee: m.C.loop)\n"));
    assert_eq!(query_err(&mut ctx, "callgraph"), QueryError::NoMethodContext);
    let mut ctx = focus(ctx, "m.C");
    assert_eq!(query_err(&mut ctx, "callgraph"), QueryError::NoMethodContext);
}

#[test]
fn recent_changes_of_the_callgraph() {
    let mut ctx = focus(corpus_ctx(), "a.P.rest");
    assert_eq!(out(&mut ctx, "callgraph -nodes | changes -c 5 -nodes"), nodes(&["a.P.sleep"]));
    assert_eq!(out(&mut ctx, "callgraph -nodes | changes -c 7 -nodes"), nodes(&["a.P.rest", "a.P.watchTV", "a.P.sleep", "a.P.dream"]));
    // without input, every changed method in the span
    assert_eq!(out(&mut ctx, "changes -c 5 -nodes"), nodes(&["a.P.sleep", "b.R.countdown"]));
    assert_eq!(out(&mut ctx, "changes -c 6 -nodes"), nodes(&["a.P.sleep", "b.R.countdown", "b.R.helper"]));
}

#[test]
fn changes_flags() {
    let mut ctx = corpus_ctx();
    let s = out(&mut ctx, "changes -c 1 -intermediate");
    assert_eq!(s.with_tag("commit").count(), 1);
    assert_eq!(
        s.with_tag("change").cloned().collect::<TupleSet>(),
        set("change: (id: \"708192a\", ast: a.P.sleep)\n")
    );
    assert_eq!(
        out(&mut ctx, "changes -between 2b3c4d5 4d5e6f7"),
        set("change: (id: \"bcdef01\", ast: a.P.sleep)\nchange: (id: \"4d5e6f7\", ast: b.R.countdown)\n")
    );
    assert_eq!(out(&mut ctx, "changes -c 0"), TupleSet::new());
    assert!(matches!(query_err(&mut ctx, "changes -nodes -intermediate"), QueryError::FlagConflict(..)));
    assert!(matches!(query_err(&mut ctx, "changes -c 1 -between HEAD~1 HEAD"), QueryError::FlagConflict(..)));
    assert!(matches!(query_err(&mut ctx, "changes -between nope HEAD"), QueryError::History(_)));
    assert!(matches!(query_err(&mut ctx, "changes -between HEAD HEAD~2"), QueryError::BadArgument(_)));
    assert!(matches!(query_err(&mut ctx, "changes -c many"), QueryError::BadArgument(_)));
    let mut bare = src_ctx(GETTERS);
    assert!(matches!(query_err(&mut bare, "changes"), QueryError::History(_)));
}

#[test]
fn changes_with_empty_input_is_empty() {
    let mut ctx = corpus_ctx();
    // the select matches nothing, so changes receives an empty set
    assert!(out(&mut ctx, "ast -global | select -t nothing | changes -c 7").is_empty());
}

#[test]
fn statement_level_changes() {
    let mut ctx = focus(corpus_ctx(), "a.P.sleep");
    let s = out(&mut ctx, "ast -type Statement -topLevel | changes -c 1");
    assert_eq!(
        s,
        set("change: (id: \"708192a\", ast: a.P.sleep/body[0])\nchange: (id: \"708192a\", ast: a.P.sleep/body[2])\n")
    );
}

#[test]
fn issue_queries() {
    let mut ctx = corpus_ctx();
    assert_eq!(out(&mut ctx, "issues").len(), 2);
    let mut ctx = focus(corpus_ctx(), "b.R.countdown");
    let joined = out(&mut ctx, "ast -type Method | changes -c 7 -intermediate | join change.id,commit.message,ast -as data | issues");
    assert_eq!(joined.len(), 1);
    assert_eq!(joined.iter().next().unwrap().get("number"), Some(&Value::Int(12)));
    let mut none = src_ctx(GETTERS);
    assert_eq!(query_err(&mut none, "issues"), QueryError::NoIssueTracker);
}

#[test]
fn select_examples() {
    let merged = set(CALLS).union(&set("node: (node: a.P.getAge)\nnode: (node: a.P.getAddress)\n"));
    let mut ctx = src_ctx(GETTERS);
    let args = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    assert_eq!(select(&merged, &args(&["-t", "calls"])).unwrap(), set(CALLS));
    assert_eq!(select(&merged, &[]).unwrap(), merged);
    let commits = set("commit: (commit: \"bcdef01\", author: \"John\")\ncommit: (commit: \"1a2b3c4\", author: \"Alice\")\n");
    assert_eq!(
        select(&commits, &args(&["author=John"])).unwrap(),
        set("commit: (commit: \"bcdef01\", author: \"John\")\n")
    );
    assert_eq!(select(&merged, &args(&["callee~sleep|dream"])).unwrap().len(), 2);
    assert_eq!(select(&merged, &args(&["missing=1"])).unwrap(), TupleSet::new());
    assert!(matches!(select(&merged, &args(&["nokey"])), Err(QueryError::BadArgument(_))));
    assert!(matches!(select(&merged, &args(&["k~("])), Err(QueryError::BadRegex { .. })));
    assert!(out(&mut ctx, "select").is_empty());
}

fn strs(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

#[test]
fn join_relates_changes_and_commit_messages() {
    let input = set(
        "change: (id: \"4d5e6f7\", ast: b.R.countdown)\n\
         change: (id: \"708192a\", ast: a.P.sleep)\n\
         commit: (id: \"4d5e6f7\", author: \"Bob\", message: \"Fix #12: countdown never terminates\")\n\
         commit: (id: \"708192a\", author: \"John\", message: \"Log sleep duration, see #12 and #7\")\n\
         commit: (id: \"6f70819\", author: \"Bob\", message: \"Mention the issue tracker\")\n",
    );
    let spec = JoinSpec::parse(&strs(&["change.id,commit.message,ast", "-as", "data"])).unwrap();
    assert_eq!(
        join(&input, &spec).unwrap(),
        set("data: (id: \"4d5e6f7\", message: \"Fix #12: countdown never terminates\", ast: b.R.countdown)\n\
             data: (id: \"708192a\", message: \"Log sleep duration, see #12 and #7\", ast: a.P.sleep)\n")
    );
    let spec = JoinSpec::parse(&strs(&["change.ast,commit.author"])).unwrap();
    assert!(join(&input, &spec).unwrap().iter().all(|t| t.tag() == "change_commit"));
}

#[test]
fn join_edge_cases() {
    let input = set("a: (k: 1, x: 10)\nb: (k: 2, y: 20)\n");
    let spec = JoinSpec::parse(&strs(&["a.x,b.y"])).unwrap();
    assert!(join(&input, &spec).unwrap().is_empty());
    let spec = JoinSpec::parse(&strs(&["a.x,b.zzz"])).unwrap();
    assert_eq!(join(&input, &spec), Err(QueryError::MissingSelector("b.zzz".into())));
    let spec = JoinSpec::parse(&strs(&["a.x", "nothere"])).unwrap();
    assert!(matches!(join(&input, &spec), Err(QueryError::BadArgument(_))));
    let spec = JoinSpec::parse(&strs(&["a.x,c.y"])).unwrap();
    assert!(join(&input, &spec).unwrap().is_empty(), "an absent tag group joins to nothing");
    assert!(JoinSpec::parse(&strs(&["a.1x"])).is_err());
    assert!(JoinSpec::parse(&strs(&["a.x", "-as", "no good"])).is_err());
}

/// Nested-loop natural join over two tags, written independently of `join`.
fn oracle_join(input: &TupleSet, ta: &str, tb: &str, picks: &[(usize, &str)], tag: &str) -> TupleSet {
    let mut out = TupleSet::new();
    for a in input.iter().filter(|t| t.tag() == ta) {
        for b in input.iter().filter(|t| t.tag() == tb) {
            let agree = a.elements().iter().all(|(n, v)| match b.get(n) {
                Some(w) => v == w,
                None => true,
            });
            if !agree {
                continue;
            }
            let mut els: Vec<(String, Value)> = Vec::new();
            let mut complete = true;
            for &(side, name) in picks {
                if els.iter().any(|(n, _)| n == name) {
                    continue;
                }
                match [a, b][side].get(name) {
                    Some(v) => els.push((name.to_string(), v.clone())),
                    None => complete = false,
                }
            }
            if complete {
                out.insert(Tuple::new(Some(tag), els).unwrap());
            }
        }
    }
    out
}

fn arb_join_input() -> impl Strategy<Value = TupleSet> {
    let tuple = (
        prop_oneof![Just("l"), Just("r")],
        proptest::collection::btree_map(prop_oneof![Just("k"), Just("v"), Just("w"), Just("z")], 0i64..3, 1..4),
    )
        .prop_map(|(tag, els)| Tuple::new(Some(tag), els.into_iter().map(|(k, v)| (k, Value::Int(v)))).unwrap());
    proptest::collection::vec(tuple, 0..20).prop_map(|v| v.into_iter().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    #[test]
    fn join_matches_nested_loop_oracle(input in arb_join_input()) {
        let spec = JoinSpec::parse(&strs(&["l.k,r.v,l.w", "-as", "j"])).unwrap();
        let picks = [(0, "k"), (1, "v"), (0, "w")];
        match join(&input, &spec) {
            Ok(got) => prop_assert_eq!(got, oracle_join(&input, "l", "r", &picks, "j")),
            Err(QueryError::MissingSelector(_)) => {
                let lacks = |tag: &str, e: &str| !input.iter().any(|t| t.tag() == tag && t.get(e).is_some());
                prop_assert!(lacks("l", "k") || lacks("r", "v") || lacks("l", "w"));
            }
            Err(e) => prop_assert!(false, "{e}"),
        }
    }
}

fn ids(v: &[&str]) -> BTreeSet<NodeId> {
    v.iter().map(|s| NodeId::from(*s)).collect()
}

fn edges(ts: &TupleSet) -> Vec<(NodeId, NodeId)> {
    ts.iter()
        .map(|t| {
            let r: Vec<&NodeId> = t.node_refs().collect();
            (r[0].clone(), r[1].clone())
        })
        .collect()
}

#[test]
fn reachable_examples() {
    let calls = set(CALLS);
    assert!(self_reachable(&edges(&calls)).is_empty());
    let cyclic = calls.union(&set("calls: (caller: a.P.sleep, callee: a.P.rest)\n"));
    assert_eq!(self_reachable(&edges(&cyclic)), ids(&["a.P.rest", "a.P.sleep"]));
    assert_eq!(reachable_from(&edges(&calls), &NodeId::from("a.P.rest")), ids(&["a.P.watchTV", "a.P.sleep", "a.P.dream"]));

    let mut ctx = focus(corpus_ctx(), "a.P.rest");
    assert!(out(&mut ctx, "callgraph | reachable -self").is_empty());
    assert_eq!(out(&mut ctx, "callgraph | reachable").len(), 3);
    assert_eq!(out(&mut ctx, "callgraph | reachable -from a.P.sleep"), nodes(&["a.P.dream"]));
    assert_eq!(out(&mut ctx, "callgraph -global | reachable -self"), nodes(&["b.R.countdown", "b.R.fact"]));
}

#[test]
fn reachable_passes_node_tuples_through() {
    let mut ctx = focus(corpus_ctx(), "a.P.rest");
    let s = out(&mut ctx, "{ callgraph ; select } | reachable -from a.P.rest");
    assert_eq!(s.len(), 3);
    let mixed = out(&mut ctx, "{ callgraph ; ast -type Method -global } | reachable -from a.P.sleep");
    assert_eq!(mixed, nodes(&["a.P.dream"]));
    let tagged = out(&mut ctx, "{ callgraph ; importCSV profile.csv -node method -tag m | select msec=100 } | reachable -from a.P.sleep");
    assert_eq!(tagged, nodes(&["a.P.dream"]).union(&set("m: (method: a.P.dream, msec: 100)\n")), "tagged rows pass through with their node");
}

#[test]
fn reachable_errors() {
    let mut ctx = corpus_ctx();
    assert_eq!(query_err(&mut ctx, "callgraph -global | reachable"), QueryError::MissingStart);
    assert!(matches!(query_err(&mut ctx, "issues | reachable -self"), QueryError::NotARelation(_)));
    assert!(matches!(query_err(&mut ctx, "reachable -self -from a.P"), QueryError::FlagConflict(..)));
}

/// Floyd–Warshall transitive closure, then the diagonal.
fn oracle_self(n: usize, e: &[(usize, usize)]) -> BTreeSet<usize> {
    let mut r = vec![vec![false; n]; n];
    for &(a, b) in e {
        r[a][b] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if r[i][k] && r[k][j] {
                    r[i][j] = true;
                }
            }
        }
    }
    (0..n).filter(|&i| r[i][i]).collect()
}

pub(crate) fn arb_graph() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (1usize..=15).prop_flat_map(|n| (Just(n), proptest::collection::vec((0..n, 0..n), 0..30)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]
    #[test]
    fn self_reachability_matches_closure((n, e) in arb_graph()) {
        let name = |i: usize| NodeId::from(format!("g.N{i}"));
        let edges: Vec<(NodeId, NodeId)> = e.iter().map(|&(a, b)| (name(a), name(b))).collect();
        let want: BTreeSet<NodeId> = oracle_self(n, &e).into_iter().map(name).collect();
        prop_assert_eq!(self_reachable(&edges), want);
    }
}

#[test]
fn csv_import() {
    let mut ctx = corpus_ctx();
    let s = out(&mut ctx, "importCSV profile.csv -node method");
    assert_eq!(s.len(), 3);
    assert!(s.contains(&Tuple::new(None, [("method", Value::node("a.P.dream")), ("msec", Value::Int(100))]).unwrap()));
    assert!(s.iter().all(|t| t.tag() == "method"));
    let s = out(&mut ctx, "importCSV profile.csv -tag profile");
    assert!(s.iter().all(|t| t.tag() == "profile" && t.get("method").unwrap().as_text().is_some()));

    let dir = tempfile::tempdir().unwrap();
    ctx.work_dir = dir.path().to_path_buf();
    std::fs::write(dir.path().join("p.csv"), "method,msec\na.P.rest,1.5\nno.such.m,3\n\"a.P.sleep\",x y\n").unwrap();
    let run = run(&mut ctx, "importCSV p.csv -node method").unwrap();
    assert_eq!(run.warnings.len(), 1);
    assert_eq!(
        run.sinks[0].output,
        [
            Tuple::new(None, [("method", Value::node("a.P.rest")), ("msec", Value::real(1.5).unwrap())]).unwrap(),
            Tuple::new(None, [("method", Value::node("a.P.sleep")), ("msec", Value::text("x y"))]).unwrap(),
        ]
        .into_iter()
        .collect()
    );
    std::fs::write(dir.path().join("h.csv"), "method,msec\n").unwrap();
    assert!(out(&mut ctx, "importCSV h.csv").is_empty());
    std::fs::write(dir.path().join("e.csv"), "").unwrap();
    assert!(matches!(query_err(&mut ctx, "importCSV e.csv"), QueryError::EmptyHeader(_)));
    assert!(matches!(query_err(&mut ctx, "importCSV missing.csv"), QueryError::FileNotFound(_)));
    assert!(matches!(query_err(&mut ctx, "importCSV h.csv -node nope"), QueryError::BadArgument(_)));
    assert!(matches!(query_err(&mut ctx, "importCSV"), QueryError::BadArgument(_)));
}

#[test]
fn heatmap_buckets() {
    let mut ctx = corpus_ctx();
    let run = run(&mut ctx, "importCSV profile.csv -node method | heatmap").unwrap();
    assert!(run.sinks[0].output.is_empty());
    assert_eq!(run.plans[0].renderer, Renderer::Heatmap);
    let entries = heat_entries(&run.plans[0].payload).unwrap();
    let buckets: Vec<(String, u8)> = entries.iter().map(|e| (e.node.to_string(), e.bucket)).collect();
    assert_eq!(buckets, [("a.P.dream".into(), 9), ("a.P.rest".into(), 0), ("a.P.sleep".into(), 4)]);
    assert_eq!(heat_bucket(7.0, 7.0, 7.0), 0);
    assert_eq!(heat_entries(&set("h: (n: a.B, v: 3.5)\n")).unwrap()[0].bucket, 0);
    assert!(matches!(heat_entries(&set("h: (n: a.B, v: \"x\")\n")), Err(QueryError::NoNumericElement(_))));
    assert!(matches!(heat_entries(&set("h: (v: 1)\n")), Err(QueryError::NoNodeElement(_))));
}

proptest! {
    #[test]
    fn heat_buckets_are_monotone(mut vals in proptest::collection::vec(-1e6f64..1e6, 1..50)) {
        vals.sort_by(f64::total_cmp);
        let (min, max) = (vals[0], vals[vals.len() - 1]);
        let b: Vec<u8> = vals.iter().map(|&v| heat_bucket(v, min, max)).collect();
        prop_assert!(b.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(b.iter().all(|&x| x <= 9));
        prop_assert_eq!(b[0], 0);
    }
}

#[test]
fn visualizations_emit_nothing_and_keep_payload() {
    let mut ctx = focus(corpus_ctx(), "a.P.rest");
    for (prompt, renderer) in [
        ("callgraph | table", Renderer::Table),
        ("callgraph | arrows", Renderer::Arrows),
        ("callgraph -nodes | highlight -color red", Renderer::Highlight { color: Some("red".into()) }),
        ("callgraph | highlight", Renderer::Highlight { color: None }),
    ] {
        let run = run(&mut ctx, prompt).unwrap();
        assert!(run.sinks[0].output.is_empty(), "{prompt}");
        assert_eq!(run.plans.len(), 1);
        assert_eq!(run.plans[0].renderer, renderer);
        let source = prompt.split(" | ").next().unwrap();
        assert_eq!(run.plans[0].payload, out(&mut ctx, source));
    }
    assert!(matches!(query_err(&mut ctx, "callgraph -nodes | arrows"), QueryError::NotARelation(_)));
    assert!(matches!(query_err(&mut ctx, "issues | highlight"), QueryError::NoNodeElement(_)));
    assert!(matches!(query_err(&mut ctx, "callgraph | highlight -color mauve"), QueryError::BadArgument(_)));
    assert!(matches!(query_err(&mut ctx, "callgraph | messages"), QueryError::BadArgument(_)));
}

#[test]
fn messages_need_text_and_anchor() {
    let mut reg = registry();
    reg.register("msg", 1, crate::engine::QueryKind::Resource, |_: crate::engine::Call<'_>, _: &mut Context| {
        Ok(Output::tuples(TupleSet::parse("message: (message: \"hi\", ast: a.P.rest, type: \"info\")\n").unwrap()))
    })
    .unwrap();
    let mut ctx = corpus_ctx();
    let run = execute(&to_network(&parse_prompt("msg").unwrap()), &reg, &mut ctx).unwrap();
    assert_eq!(run.plans[0].renderer, Renderer::Messages);
    let run = execute(&to_network(&parse_prompt("msg | messages").unwrap()), &reg, &mut ctx).unwrap();
    assert_eq!(run.plans[0].renderer, Renderer::Messages);
}

#[test]
fn dot_output_and_graph_file() {
    let dot = dot_graph(&set(CALLS));
    assert_eq!(dot.lines().filter(|l| l.contains("->")).count(), 3);
    assert!(dot.starts_with("digraph codeq {\n") && dot.ends_with("}\n"));
    let dir = tempfile::tempdir().unwrap();
    let mut ctx = focus(corpus_ctx(), "a.P.rest");
    ctx.work_dir = dir.path().to_path_buf();
    assert!(out(&mut ctx, "callgraph | toGraphFile g.dot").is_empty());
    assert_eq!(std::fs::read_to_string(dir.path().join("g.dot")).unwrap(), dot);
}

fn copy_corpus(dir: &Path) -> Context {
    for (path, text) in crate::minilang::read_sources(&fixtures().join("corpus")).unwrap() {
        std::fs::write(dir.join(path), text).unwrap();
    }
    let mut ctx = Context::new(Program::load_dir(dir).unwrap());
    ctx.corpus_dir = Some(dir.to_path_buf());
    ctx
}

fn leading_prints(p: &Program, method: &str) -> usize {
    let m = p.resolve(&NodeId::from(method)).unwrap();
    m.body().unwrap().children().take_while(|s| s.kind == NodeKind::PrintStatement).count()
}

#[test]
fn insert_arg_printing_rewrites_selected_methods() {
    let dir = tempfile::tempdir().unwrap();
    let mut ctx = copy_corpus(dir.path());
    let before = ctx.program.clone();
    let main_before = std::fs::read_to_string(dir.path().join("Main.mini")).unwrap();

    let result = out(&mut ctx, "ast -type Method -global -name \"^(dream|rest)$\" | insertArgPrinting");
    assert_eq!(result, nodes(&["a.P.dream", "a.P.rest"]));
    assert_eq!(leading_prints(&ctx.program, "a.P.dream"), 2);
    assert_eq!(leading_prints(&ctx.program, "a.P.rest"), 1);

    let main_after = std::fs::read_to_string(dir.path().join("Main.mini")).unwrap();
    assert!(main_after.starts_with("// Daily routine of a person.\n"), "comments survive");
    assert!(main_after.contains("        dream(n) {\n            print(\"dream\");\n            print(\"n\", n);\n"), "{main_after}");
    assert_eq!(
        std::fs::read_to_string(dir.path().join("Recursion.mini")).unwrap(),
        before.file("Recursion.mini").unwrap().text,
        "untouched files are not rewritten"
    );
    // the files on disk parse to the updated program
    let reloaded = Program::load_dir(dir.path()).unwrap();
    assert!(reloaded.same_shape(&ctx.program));
    for m in before.nodes_of_kind(NodeKind::Method, None) {
        if m.id.as_str() != "a.P.dream" && m.id.as_str() != "a.P.rest" {
            let old = crate::minilang::print_node(m);
            let new = crate::minilang::print_node(reloaded.resolve(&m.id).unwrap());
            assert_eq!(old, new, "{}", m.id);
        }
    }
    assert_ne!(main_before, main_after);

    // not idempotent: a second run adds another set of prints
    out(&mut ctx, "ast -type Method -global -name ^dream$ | insertArgPrinting");
    assert_eq!(leading_prints(&ctx.program, "a.P.dream"), 4);
}

#[test]
fn insert_arg_printing_in_memory_with_two_params() {
    let mut ctx = focus(src_ctx("module m { class C { f(a, b) { return a; } } }"), "m.C.f");
    out(&mut ctx, "ast -type Method | insertArgPrinting | insertArgPrinting");
    assert_eq!(leading_prints(&ctx.program, "m.C.f"), 6);
}

#[test]
fn insert_arg_printing_rejects_non_methods_without_writing() {
    let dir = tempfile::tempdir().unwrap();
    let mut ctx = copy_corpus(dir.path());
    let before = std::fs::read_to_string(dir.path().join("Main.mini")).unwrap();
    let err = query_err(&mut ctx, "{ ast -type Method -global ; ast -type Class -global } | insertArgPrinting");
    assert!(matches!(err, QueryError::NotAMethodNode(_)));
    assert_eq!(std::fs::read_to_string(dir.path().join("Main.mini")).unwrap(), before);
    let leftovers: Vec<_> = std::fs::read_dir(dir.path()).unwrap().flatten().filter(|e| e.file_name().to_string_lossy().starts_with('.')).collect();
    assert!(leftovers.is_empty());
}

#[test]
fn heat_bucket_puts_the_maximum_on_top_despite_rounding() {
    // 9 * (max - min) / (max - min) rounds below 9 for these bounds
    let (min, max) = (-9616.800904025036, 9204.640924101768);
    assert_eq!(heat_bucket(max, min, max), 9);
    assert_eq!(heat_bucket(min, min, max), 0);
}
