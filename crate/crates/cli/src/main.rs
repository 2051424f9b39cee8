//! `seqsearch`: solve, tabulate and verify sequential-search contests.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 no equilibrium (not
//! viable / none exists), 3 a verification failed.

mod args;
mod emit;
mod solve;
mod table;
mod verify;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] seqsearch::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_non_existence() => 2,
            _ => 1,
        }
    }
}

/// What a command reports back to `main`.
pub enum Outcome {
    Done,
    /// An equilibrium search completed but found nothing.
    NoEquilibrium,
    VerifyFailed,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Solve(cmd) => solve::run(cmd, &cli.global),
        Command::Table(cmd) => table::run(cmd, &cli.global),
        Command::Verify(cmd) => verify::run(cmd, &cli.global),
    };
    match result {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::NoEquilibrium) => ExitCode::from(2),
        Ok(Outcome::VerifyFailed) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
