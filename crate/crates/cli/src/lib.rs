//! Command-line front end: JSON I/O, subcommand dispatch, exit-code
//! policy (0 success, 1 check failure, 2 input error).

pub mod app;
pub mod io;

use clap::Parser;

/// Errors surfaced to the terminal, carrying the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Malformed files, bad flags, unreadable paths: exit 2.
    Input(String),
    /// Well-formed input on which a computation or check failed: exit 1.
    Failure(String),
}

impl CliError {
    pub fn input(message: String) -> Self {
        CliError::Input(message)
    }

    pub fn failure_from(e: acmc_core::error::Error) -> Self {
        CliError::Failure(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Failure(m) => write!(f, "check failure: {m}"),
        }
    }
}

/// Parses argv, runs the subcommand, writes the report, returns the exit
/// code for the process.
pub fn execute() -> i32 {
    let cli = app::Cli::parse();
    match app::run(cli) {
        Ok(outcome) => {
            match &outcome.output {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, &outcome.report) {
                        eprintln!("input error: cannot write {path}: {e}");
                        return 2;
                    }
                }
                None => print!("{}", outcome.report),
            }
            outcome.code
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
