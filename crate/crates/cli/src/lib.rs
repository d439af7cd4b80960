//! Command-line front end: run configs, checkpoints and result files.
//!
//! Exit codes: 0 success, 2 usage error, 3 validation error, 4 runtime
//! failure.

pub mod artifacts;
pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;

use clap::Parser;

pub use commands::Cli;
pub use error::{CliError, CliResult, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, EXIT_VALIDATION};

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Diagnostics go to stderr.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match commands::run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("covert: {e}");
            e.exit_code()
        }
    }
}
