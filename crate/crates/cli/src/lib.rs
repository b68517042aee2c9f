//! The `jetblend` command line. [`execute`] is pure apart from reading input
//! files: it returns the bytes destined for stdout and for each output file,
//! and [`run`] performs the writes.

mod commands;
mod config;
mod output;

use clap::Parser;

pub use output::{Outcome, Status};

/// Parses `args` (including the program name), expands `--config` and runs
/// the selected command.
pub fn execute(args: &[String]) -> Outcome {
    let args = match config::expand(args) {
        Ok(a) => a,
        Err(e) => return Outcome::failure(Status::Invalid, e.to_string()),
    };
    match commands::Cli::try_parse_from(&args) {
        Ok(cli) => commands::dispatch(cli),
        Err(e) => {
            use clap::error::ErrorKind;
            match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Outcome::ok_text(e.to_string()),
                _ => Outcome::failure(Status::Invalid, e.to_string()),
            }
        }
    }
}

/// [`execute`] followed by atomic file writes and console output; returns
/// the process exit code.
pub fn run(args: &[String]) -> i32 {
    let outcome = execute(args);
    match outcome.commit() {
        Ok(()) => outcome.status.code(),
        Err(e) => {
            eprintln!("error: {e:#}");
            Status::Invalid.code()
        }
    }
}
