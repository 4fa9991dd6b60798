use std::io::{self, BufRead, Write};

use crate::render::Format;
use crate::session::Session;

const HELP: &str = "\
query text           run a query, e.g. `callgraph -nodes | table`
:focus SPEC          set the context to NODEID or FILE:LINE:COL (no SPEC clears it)
:alias NAME = TEXT   define a query alias (no arguments lists them)
:unalias NAME        remove an alias
:format text|json|dot
:reload              reread corpus, history and issues
:quit
";

pub enum Step {
    Continue,
    Quit,
}

/// Reads lines until `:quit` or end of input. Errors go to `err`; the loop
/// only stops early when writing fails.
pub fn repl(session: &mut Session, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write, prompt: bool) -> io::Result<()> {
    let mut buf = Vec::new();
    loop {
        if prompt {
            write!(out, "codeq> ")?;
            out.flush()?;
        }
        buf.clear();
        if input.read_until(b'\n', &mut buf)? == 0 {
            return Ok(());
        }
        let line = String::from_utf8_lossy(&buf);
        if let Step::Quit = handle_line(session, line.trim(), out, err)? {
            return Ok(());
        }
    }
}

pub fn handle_line(session: &mut Session, line: &str, out: &mut dyn Write, err: &mut dyn Write) -> io::Result<Step> {
    if line.is_empty() || line.starts_with('#') {
        return Ok(Step::Continue);
    }
    let Some(cmd) = line.strip_prefix(':') else {
        match session.run(line) {
            Ok(o) => {
                for w in &o.warnings {
                    writeln!(err, "warning: {w}")?;
                }
                out.write_all(o.output.as_bytes())?;
            }
            Err(e) => writeln!(err, "error: {e}")?,
        }
        return Ok(Step::Continue);
    };
    let (word, rest) = cmd.split_once(char::is_whitespace).unwrap_or((cmd, ""));
    let rest = rest.trim();
    match word {
        "quit" | "q" | "exit" => return Ok(Step::Quit),
        "help" | "h" => out.write_all(HELP.as_bytes())?,
        "focus" if rest.is_empty() => {
            session.clear_focus();
            writeln!(out, "focus cleared")?;
        }
        "focus" => match session.set_focus(rest) {
            Ok(()) => writeln!(out, "focus: {}", session.ctx.focus.as_ref().expect("just set"))?,
            Err(e) => writeln!(err, "error: {e:#}")?,
        },
        "alias" if rest.is_empty() => {
            for (name, body) in session.aliases.iter() {
                writeln!(out, "{name} = {body}")?;
            }
        }
        "alias" => match rest.split_once('=') {
            Some((name, body)) => {
                if let Err(e) = session.define_alias(name.trim(), body.trim()) {
                    writeln!(err, "error: {e:#}")?;
                }
            }
            None => writeln!(err, "error: expected `:alias NAME = TEXT`")?,
        },
        "unalias" => {
            if let Err(e) = session.remove_alias(rest) {
                writeln!(err, "error: {e:#}")?;
            }
        }
        "format" => match Format::parse(rest) {
            Some(f) => session.format = f,
            None => writeln!(err, "error: unknown format `{rest}`; use text, json or dot")?,
        },
        "reload" => match session.reload() {
            Ok(ws) => {
                for w in ws {
                    writeln!(err, "warning: {w}")?;
                }
            }
            Err(e) => writeln!(err, "error: {e:#}")?,
        },
        _ => writeln!(err, "error: unknown command `:{word}`; try :help")?,
    }
    Ok(Step::Continue)
}
