//! Command-line front end for `rkhs-core`: solve problems, convergence
//! studies and kernel/Gram diagnostics, with CSV or JSON output.
//!
//! Exit codes: 0 success, 2 configuration or argument error, 3 expression
//! syntax error, 4 numeric failure, 5 domain error.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;

use std::io::Write;

pub use args::Cli;
pub use error::{CliError, CliResult};

/// Runs one parsed command; diagnostics and summaries go to `log`.
pub fn run(cli: &Cli, log: &mut dyn Write) -> CliResult<()> {
    use args::Command;
    match &cli.command {
        Command::Solve(a) => commands::cmd_solve(a, log),
        Command::Converge(a) => commands::cmd_converge(a, log),
        Command::KernelDump(a) => commands::cmd_kernel_dump(a, log),
        Command::GramDump(a) => commands::cmd_gram_dump(a, log),
    }
}
