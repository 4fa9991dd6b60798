//! The built-in queries.
//!
//! | query | kind |
//! |---|---|
//! | `ast`, `callgraph`, `changes`, `issues`, `importCSV`, `insertArgPrinting` | resource |
//! | `select`, `join`, `reachable` | operator |
//! | `table`, `highlight`, `arrows`, `heatmap`, `messages`, `toGraphFile` | visualization |
//!
//! Each query parses its own arguments with [`Flags`].

mod operators;
mod resources;
mod visual;

use std::collections::BTreeMap;

use crate::engine::{Call, Context, Output, QueryError, QueryKind, Registry};

pub use operators::{join, reachable_from, select, self_reachable, JoinSpec};
pub use visual::{dot_graph, heat_bucket, heat_entries, HeatEntry};

/// A flag a query accepts and how many values follow it.
#[derive(Debug, Clone, Copy)]
pub struct FlagSpec {
    pub name: &'static str,
    pub values: usize,
}

const fn flag(name: &'static str, values: usize) -> FlagSpec {
    FlagSpec { name, values }
}

#[derive(Debug, Clone, Default)]
pub struct Flags {
    given: BTreeMap<&'static str, Vec<String>>,
    pub positional: Vec<String>,
}

fn looks_like_flag(arg: &str) -> bool {
    arg.strip_prefix('-').and_then(|r| r.chars().next()).is_some_and(|c| c.is_ascii_alphabetic())
}

impl Flags {
    /// Splits `args` into declared flags and positional words.
    pub fn parse(args: &[String], spec: &[FlagSpec], max_positional: usize) -> Result<Flags, QueryError> {
        let mut flags = Flags::default();
        let mut i = 0;
        while i < args.len() {
            let arg = &args[i];
            if looks_like_flag(arg) {
                let s = spec.iter().find(|s| s.name == &arg[1..]).ok_or_else(|| QueryError::UnknownFlag(arg.clone()))?;
                if flags.given.contains_key(s.name) {
                    return Err(QueryError::BadArgument(format!("{arg} given twice")));
                }
                let values = args.get(i + 1..i + 1 + s.values).ok_or_else(|| QueryError::MissingFlagValue(arg.clone()))?;
                flags.given.insert(s.name, values.to_vec());
                i += 1 + s.values;
            } else {
                if flags.positional.len() == max_positional {
                    return Err(QueryError::BadArgument(format!("unexpected argument `{arg}`")));
                }
                flags.positional.push(arg.clone());
                i += 1;
            }
        }
        Ok(flags)
    }

    pub fn has(&self, name: &str) -> bool {
        self.given.contains_key(name)
    }

    pub fn value(&self, name: &str) -> Option<&str> {
        self.given.get(name).and_then(|v| v.first()).map(String::as_str)
    }

    pub fn values(&self, name: &str) -> Option<&[String]> {
        self.given.get(name).map(Vec::as_slice)
    }

    pub fn exclusive(&self, a: &str, b: &str) -> Result<(), QueryError> {
        if self.has(a) && self.has(b) {
            Err(QueryError::FlagConflict(format!("-{a}"), format!("-{b}")))
        } else {
            Ok(())
        }
    }
}

type Native = fn(Call<'_>, &mut Context) -> Result<Output, QueryError>;

const QUERIES: &[(&str, QueryKind, Native)] = &[
    ("ast", QueryKind::Resource, resources::ast),
    ("callgraph", QueryKind::Resource, resources::callgraph),
    ("changes", QueryKind::Resource, resources::changes),
    ("issues", QueryKind::Resource, resources::issues),
    ("importCSV", QueryKind::Resource, resources::import_csv),
    ("insertArgPrinting", QueryKind::Resource, resources::insert_arg_printing),
    ("select", QueryKind::Operator, operators::q_select),
    ("join", QueryKind::Operator, operators::q_join),
    ("reachable", QueryKind::Operator, operators::q_reachable),
    ("table", QueryKind::Visualization, visual::table),
    ("highlight", QueryKind::Visualization, visual::highlight),
    ("arrows", QueryKind::Visualization, visual::arrows),
    ("heatmap", QueryKind::Visualization, visual::heatmap),
    ("messages", QueryKind::Visualization, visual::messages),
    ("toGraphFile", QueryKind::Visualization, visual::to_graph_file),
];

/// Adds every built-in query to `registry`.
pub fn register_all(registry: &mut Registry) -> Result<(), crate::engine::EngineError> {
    for &(name, kind, q) in QUERIES {
        registry.register(name, 1, kind, q)?;
    }
    Ok(())
}

/// A registry holding exactly the built-in queries.
pub fn registry() -> Registry {
    let mut r = Registry::new();
    register_all(&mut r).expect("built-in names are distinct");
    r
}

#[cfg(test)]
mod tests;
