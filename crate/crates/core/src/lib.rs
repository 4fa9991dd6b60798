//! Composable code-information queries.
//!
//! Queries exchange [`TupleSet`]s and are wired into a DAG by the
//! [`engine`]. Resource queries read the program ([`minilang`],
//! [`codemodel`]), its version history and an issue tracker ([`history`]);
//! operators and visualizations live in [`builtins`]; external script
//! queries are run by [`scripthost`]. The textual prompt language that
//! builds query networks lives in [`prompt`].

pub mod builtins;
pub mod codemodel;
pub mod engine;
pub mod history;
pub mod minilang;
pub mod mutation;
pub mod prompt;
pub mod scripthost;
pub mod tuple;

pub use minilang::{KindFilter, Node, NodeId, NodeKind, Program};
pub use tuple::{Tuple, TupleSet, Value};
