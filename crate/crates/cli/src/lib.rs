//! Command-line front end for `powersum-core`.
//!
//! Every subcommand writes a table (CSV with 17 significant digits, or JSON
//! with `"manifest"` and `"rows"` keys) plus a [`manifest::RunManifest`]
//! from which the run can be repeated bit for bit.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 numerical failure
//! (non-convergence, failed check or evaluation error).

use clap::Parser;
use thiserror::Error;

pub mod args;
pub mod commands;
pub mod manifest;
pub mod output;
pub mod validate;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] powersum_core::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use powersum_core::Error as E;
        match self {
            CliError::Usage(_) | CliError::Io(_) => EXIT_USAGE,
            CliError::Core(E::InvalidModel(_) | E::InvalidConfig(_)) => EXIT_USAGE,
            CliError::Core(_) => EXIT_NUMERIC,
        }
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I>(argv: I) -> i32
where
    I: IntoIterator<Item = String>,
{
    let argv: Vec<String> = argv.into_iter().collect();
    let cli = match args::Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(cli.command, &argv) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_NUMERIC,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
