use std::io::{self, IsTerminal, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use codeq_cli::{repl, Format, Options, Session};

#[derive(Parser)]
#[command(name = "codeq", version, about = "Query code, its history and its issues with composable pipelines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one query and print its rendered result.
    Run {
        query: String,
        #[command(flatten)]
        session: SessionArgs,
    },
    /// Read queries and `:commands` interactively.
    Repl {
        #[command(flatten)]
        session: SessionArgs,
    },
}

#[derive(Args)]
struct SessionArgs {
    /// Directory of `.mini` source files.
    #[arg(long, default_value = ".")]
    corpus: PathBuf,
    /// Snapshot history directory or git repository.
    #[arg(long)]
    repo: Option<PathBuf>,
    /// Script query directory; defaults to `./scripts` when present.
    #[arg(long, env = "CODEQ_SCRIPTS")]
    scripts: Option<PathBuf>,
    /// Issue tracker JSON file.
    #[arg(long)]
    issues: Option<PathBuf>,
    /// Context position: FILE:LINE:COL or a node id.
    #[arg(long)]
    at: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long)]
    no_color: bool,
    /// Directory holding the `aliases` file.
    #[arg(long, env = "CODEQ_CONFIG")]
    config: Option<PathBuf>,
    /// Script timeout in seconds.
    #[arg(long, default_value_t = 30)]
    timeout: u64,
}

impl SessionArgs {
    fn options(self) -> Options {
        let scripts = self.scripts.or_else(|| Some(PathBuf::from("scripts")).filter(|p| p.is_dir()));
        let config = self.config.or_else(default_config_dir);
        Options {
            corpus: self.corpus,
            repo: self.repo,
            scripts,
            issues: self.issues,
            config,
            at: self.at,
            format: self.format,
            color: !self.no_color && io::stdout().is_terminal() && std::env::var_os("NO_COLOR").is_none(),
            timeout: Some(Duration::from_secs(self.timeout)),
        }
    }
}

fn default_config_dir() -> Option<PathBuf> {
    if let Some(x) = std::env::var_os("XDG_CONFIG_HOME").filter(|v| !v.is_empty()) {
        return Some(PathBuf::from(x).join("codeq"));
    }
    std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".config/codeq"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { query, session } => run(&query, session.options()),
        Command::Repl { session } => interactive(session.options()),
    };
    ExitCode::from(code)
}

fn open(opts: Options) -> Result<Session, u8> {
    let session = Session::open(opts).map_err(|e| {
        eprintln!("error: {e:#}");
        2u8
    })?;
    for w in session.startup_warnings() {
        eprintln!("warning: {w}");
    }
    Ok(session)
}

fn run(query: &str, opts: Options) -> u8 {
    let mut session = match open(opts) {
        Ok(s) => s,
        Err(code) => return code,
    };
    match session.run(query) {
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            let mut out = io::stdout().lock();
            if out.write_all(outcome.output.as_bytes()).and_then(|_| out.flush()).is_err() {
                return 1;
            }
            0
        }
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code() as u8
        }
    }
}

fn interactive(opts: Options) -> u8 {
    let mut session = match open(opts) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let prompt = io::stdin().is_terminal();
    let res = repl(&mut session, &mut io::stdin().lock(), &mut io::stdout(), &mut io::stderr(), prompt);
    match res {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
