//! Library side of the `codeq` command: sessions, rendering and the REPL.

pub mod render;
pub mod repl;
pub mod session;

pub use render::{render, Format, FormatUnsupported};
pub use repl::{handle_line, repl};
pub use session::{resolve_at, Failure, Options, Outcome, Session};
