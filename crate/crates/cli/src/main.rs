//! `arrivals`: command-line front end for the arrivals library.
//!
//! Exit codes: 0 success, 1 computation or output error, 2 usage error.

mod args;
mod commands;
mod config;
mod error;
mod figures;
mod output;

use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};

use args::{Cli, Command};
use error::CliError;

fn run() -> Result<(), CliError> {
    let root = Cli::command().mut_subcommands(|s| s.args_override_self(true));
    let argv = config::expand(std::env::args_os().collect(), &root)?;
    let matches = match root.try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            std::process::exit(if code == 0 { 0 } else { 2 });
        }
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| CliError::Usage(e.to_string()))?;
    match &cli.command {
        Command::Renewal(a) => commands::renewal(a),
        Command::Stopped(a) => commands::stopped(a),
        Command::Walk(a) => commands::walk(a),
        Command::Ness(a) => commands::ness(a),
        Command::Mc(a) => commands::mc(a),
        Command::Figures(a) => figures::run(a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
