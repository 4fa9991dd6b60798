use std::sync::Mutex;

use super::*;
use crate::prompt::{parse_prompt, to_network};
use crate::tuple::Value;

fn ctx() -> Context {
    Context::new(Program::parse::<&str, &str>(&[]).unwrap())
}

fn set(text: &str) -> TupleSet {
    TupleSet::parse(text).unwrap()
}

type Seen = Arc<Mutex<BTreeMap<String, Vec<Option<TupleSet>>>>>;

/// Registers `name` as a query that records its input and emits `out`
/// (or passes its input through when `out` is `None`).
fn stub(reg: &mut Registry, seen: &Seen, name: &str, out: Option<TupleSet>) {
    let seen = seen.clone();
    let key = name.to_string();
    reg.register(name, 1, QueryKind::Operator, move |call: Call<'_>, _: &mut Context| {
        seen.lock().unwrap().entry(key.clone()).or_default().push(call.input().cloned());
        Ok(Output::tuples(out.clone().unwrap_or_else(|| call.input().cloned().unwrap_or_default())))
    })
    .unwrap();
}

#[test]
fn fig5_network_routes_sets() {
    let seen: Seen = Arc::default();
    let mut reg = Registry::new();
    stub(&mut reg, &seen, "foo", Some(set("node: (node: a.Foo)\n")));
    stub(&mut reg, &seen, "bar", Some(set("node: (node: a.Bar)\n")));
    stub(&mut reg, &seen, "baz", Some(set("node: (node: a.Baz)\nnode: (node: a.Foo)\n")));
    stub(&mut reg, &seen, "foobar", Some(set("node: (node: a.Foobar)\nnode: (node: a.Foo)\n")));
    stub(&mut reg, &seen, "queryX", None);
    stub(&mut reg, &seen, "vis1", Some(TupleSet::new()));
    stub(&mut reg, &seen, "vis2", Some(TupleSet::new()));

    let net = to_network(&parse_prompt("{ {foo ; bar} | baz ; foobar } | queryX | {vis1 ; vis2}").unwrap());
    let run = execute(&net, &reg, &mut ctx()).unwrap();
    let seen = seen.lock().unwrap();
    assert_eq!(seen["foo"], [None]);
    assert_eq!(seen["foobar"], [None]);
    let merged = set("node: (node: a.Foo)\nnode: (node: a.Bar)\n");
    assert_eq!(seen["baz"], [Some(merged)]);
    let expected = set("node: (node: a.Baz)\n").union(&set("node: (node: a.Foobar)\nnode: (node: a.Foo)\n"));
    assert_eq!(seen["queryX"], [Some(expected.clone())]);
    assert_eq!(seen["vis1"], [Some(expected.clone())]);
    assert_eq!(seen["vis1"], seen["vis2"]);
    assert_eq!(run.sinks.len(), 2);
    assert_eq!(run.plans.len(), 2);
}

#[test]
fn subtract_uses_first_branch_as_minuend() {
    let seen: Seen = Arc::default();
    let mut reg = Registry::new();
    stub(&mut reg, &seen, "all", Some(set("n: (n: 1)\nn: (n: 2)\nn: (n: 3)\n")));
    stub(&mut reg, &seen, "two", Some(set("n: (n: 2)\n")));
    stub(&mut reg, &seen, "three", Some(set("n: (n: 3)\nn: (n: 4)\n")));
    stub(&mut reg, &seen, "sink", None);
    let net = to_network(&parse_prompt("minus { all ; two ; three } | sink").unwrap());
    let run = execute(&net, &reg, &mut ctx()).unwrap();
    assert_eq!(run.sinks[0].output, set("n: (n: 1)\n"));
}

#[test]
fn auto_selection_rules() {
    let calls = set("calls: (caller: a.P.rest, callee: a.P.sleep)\ncalls: (caller: a.P.sleep, callee: a.P.dream)\n");
    let nodes = set("node: (node: a.P.getAge)\nnode: (node: a.P.getAddress)\n");
    let msg = set("message: (message: \"hi\", ast: a.P.rest)\n");
    assert_eq!(auto_select(&calls).renderer, Renderer::Arrows);
    assert_eq!(auto_select(&nodes).renderer, Renderer::Highlight { color: None });
    assert_eq!(auto_select(&msg).renderer, Renderer::Messages);
    assert_eq!(auto_select(&TupleSet::new()).renderer, Renderer::Table);
    assert_eq!(auto_select(&calls.union(&nodes)).renderer, Renderer::Table);
    assert_eq!(auto_select(&set("node: (node: a.X, w: 1)\n")).renderer, Renderer::Table);
    assert_eq!(auto_select(&calls).payload, calls);
}

#[test]
fn sink_outputs_get_plans_but_visualizations_suppress_them() {
    let mut reg = Registry::new();
    reg.register("src", 1, QueryKind::Resource, |_: Call<'_>, _: &mut Context| {
        Ok(Output::tuples(TupleSet::parse("node: (node: a.B)\n").unwrap()))
    })
    .unwrap();
    reg.register("show", 1, QueryKind::Visualization, |call: Call<'_>, _: &mut Context| {
        Ok(Output::render(Renderer::Table, call.input().cloned().unwrap_or_default()))
    })
    .unwrap();
    let run = execute(&to_network(&parse_prompt("src").unwrap()), &reg, &mut ctx()).unwrap();
    assert_eq!(run.plans[0].renderer, Renderer::Highlight { color: None });
    let run = execute(&to_network(&parse_prompt("src | show").unwrap()), &reg, &mut ctx()).unwrap();
    assert_eq!(run.plans.len(), 1);
    assert_eq!(run.plans[0].renderer, Renderer::Table);
    assert!(run.sinks[0].output.is_empty());
}

#[test]
fn duplicate_names_rejected() {
    let mut reg = Registry::new();
    let q = |_: Call<'_>, _: &mut Context| Ok(Output::default());
    reg.register("callgraph", 1, QueryKind::Resource, q).unwrap();
    assert_eq!(
        reg.register("callgraph", 1, QueryKind::Resource, q),
        Err(EngineError::DuplicateQueryName("callgraph".into()))
    );
    assert!(reg.contains("callgraph"));
}

#[test]
fn validation_errors() {
    let mut reg = Registry::new();
    let q = |_: Call<'_>, _: &mut Context| Ok(Output::default());
    reg.register("q", 1, QueryKind::Operator, q).unwrap();
    reg.register_arc(Registration {
        name: "needs".into(),
        kind: QueryKind::Operator,
        arity: 2,
        required: 2,
        query: Arc::new(q),
    })
    .unwrap();

    let mut net = QueryNetwork::new();
    let a = net.add_query("q", &[]);
    let b = net.add_query("q", &[]);
    net.connect(a, b, 0);
    net.connect(b, a, 0);
    assert_eq!(execute(&net, &reg, &mut ctx()), Err(EngineError::Cycle));

    let mut net = QueryNetwork::new();
    let a = net.add_query("q", &[]);
    let b = net.add_query("q", &[]);
    net.connect(a, b, 1);
    assert!(matches!(execute(&net, &reg, &mut ctx()), Err(EngineError::BadPort { node: 1, .. })));

    let mut net = QueryNetwork::new();
    let a = net.add_query("q", &[]);
    let n = net.add_query("needs", &[]);
    net.connect(a, n, 0);
    assert!(matches!(execute(&net, &reg, &mut ctx()), Err(EngineError::BadPort { node: 1, .. })));
    let b = net.add_query("q", &[]);
    net.connect(b, n, 1);
    assert!(execute(&net, &reg, &mut ctx()).is_ok());

    let mut net = QueryNetwork::new();
    net.add_query("nope", &[]);
    assert_eq!(execute(&net, &reg, &mut ctx()), Err(EngineError::UnknownQuery("nope".into())));
}

#[test]
fn multi_input_query_sees_ports_in_order() {
    let mut reg = Registry::new();
    reg.register("one", 1, QueryKind::Resource, |_: Call<'_>, _: &mut Context| {
        Ok(Output::tuples(TupleSet::parse("n: (n: 1)\n").unwrap()))
    })
    .unwrap();
    reg.register("two", 1, QueryKind::Resource, |_: Call<'_>, _: &mut Context| {
        Ok(Output::tuples(TupleSet::parse("n: (n: 2)\n").unwrap()))
    })
    .unwrap();
    reg.register("diff", 2, QueryKind::Operator, |call: Call<'_>, _: &mut Context| {
        let a = call.inputs[0].clone().unwrap();
        let b = call.inputs[1].clone().unwrap();
        Ok(Output::tuples(a.union(&b).subtract([&b])))
    })
    .unwrap();
    let mut net = QueryNetwork::new();
    let two = net.add_query("two", &[]);
    let one = net.add_query("one", &[]);
    let d = net.add_query("diff", &[]);
    net.connect(two, d, 1);
    net.connect(one, d, 0);
    let run = execute(&net, &reg, &mut ctx()).unwrap();
    assert_eq!(run.sinks[0].output, TupleSet::parse("n: (n: 1)\n").unwrap());
}

#[test]
fn failure_aborts_with_earlier_warnings() {
    let ran = Arc::new(Mutex::new(false));
    let mut reg = Registry::new();
    reg.register("warn", 1, QueryKind::Operator, |_: Call<'_>, _: &mut Context| {
        Ok(Output::default().warn("careful"))
    })
    .unwrap();
    reg.register("fail", 1, QueryKind::Operator, |_: Call<'_>, _: &mut Context| {
        Err(QueryError::Other("boom".into()))
    })
    .unwrap();
    let flag = ran.clone();
    reg.register("after", 1, QueryKind::Operator, move |_: Call<'_>, _: &mut Context| {
        *flag.lock().unwrap() = true;
        Ok(Output::default())
    })
    .unwrap();
    let err = execute(&to_network(&parse_prompt("warn | fail | after").unwrap()), &reg, &mut ctx()).unwrap_err();
    match err {
        EngineError::Query { query, source, warnings } => {
            assert_eq!(query, "fail");
            assert_eq!(source, QueryError::Other("boom".into()));
            assert_eq!(warnings, ["warn: careful"]);
        }
        other => panic!("{other:?}"),
    }
    assert!(!*ran.lock().unwrap());
}

#[test]
fn execution_is_deterministic() {
    let mut reg = Registry::new();
    reg.register("count", 1, QueryKind::Resource, |call: Call<'_>, _: &mut Context| {
        let n: i64 = call.args.first().map_or(3, |a| a.parse().unwrap());
        Ok(Output::tuples((0..n).map(|i| Tuple::new(None, [("n", Value::Int(i))]).unwrap()).collect()))
    })
    .unwrap();
    let net = to_network(&parse_prompt("{ count 4 ; count 2 } | { count ; count 1 }").unwrap());
    let first = execute(&net, &reg, &mut ctx()).unwrap();
    let second = execute(&net, &reg, &mut ctx()).unwrap();
    assert_eq!(first, second);
}

#[cfg(unix)]
#[test]
fn scripts_are_found_lazily() {
    let dir = tempfile::tempdir().unwrap();
    let mut reg = Registry::new();
    reg.set_script_dir(Some(dir.path().to_path_buf()));
    assert!(!reg.contains("instability"));
    std::fs::write(dir.path().join("instability.py"), "").unwrap();
    assert!(reg.contains("instability"));
    reg.register("instability", 1, QueryKind::Operator, |_: Call<'_>, _: &mut Context| Ok(Output::default()))
        .unwrap();
    assert_eq!(reg.shadowed_scripts().len(), 1);
}
