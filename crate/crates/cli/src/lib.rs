//! Command-line front end: configuration resolution, the `train`, `ed`, `bound` and `scan`
//! subcommands, and their on-disk outputs.

pub mod args;
pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::fmt;
use std::process::ExitCode;

use clap::Parser;

pub use args::{Cli, Command, CommonArgs, ScanArgs, ScanAxis};
pub use config::{resolve, InequalitySpec, RunConfig};

/// Failure of a subcommand, carrying its exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration (exit 2).
    Usage(String),
    /// Numerical failure: non-finite values, solver breakdown, bound mismatch (exit 3).
    Numeric(String),
    /// A size limit was exceeded (exit 4).
    Capacity(String),
    /// Anything else, mostly I/O (exit 1).
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Other(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Capacity(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numeric(m) | CliError::Capacity(m) | CliError::Other(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<nqs_bell::Error> for CliError {
    fn from(e: nqs_bell::Error) -> Self {
        use nqs_bell::Error as E;
        let msg = e.to_string();
        match e {
            E::Capacity { .. } => CliError::Capacity(msg),
            E::Numeric(_) | E::NoConvergence { .. } => CliError::Numeric(msg),
            E::Io(_) => CliError::Other(msg),
            _ => CliError::Usage(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train(a) => commands::cmd_train(&resolve(&a)?).map(|_| ()),
        Command::Ed(a) => commands::cmd_ed(&resolve(&a)?).map(|_| ()),
        Command::Bound(a) => commands::cmd_bound(&resolve(&a)?).map(|_| ()),
        Command::Scan(a) => commands::cmd_scan(&a).map(|_| ()),
    }
}

/// Parses `args` (program name first), runs, and maps the outcome to an exit status.
pub fn main_with<I, S>(args: I) -> ExitCode
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nqs-bell: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
