//! `promal` — align matrix sets, compute alignment-based distances, and
//! explore them with multidimensional scaling and hierarchical clustering.
//!
//! Exit codes: 0 on success, 1 on usage or input errors, 2 when results were
//! produced but carry a warning (e.g. an alignment that stopped at the
//! iteration cap). The last stderr line is always a machine-parseable
//! `STATUS:` trailer.

mod commands;
mod config;
mod svg;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use commands::{Cli, Outcome};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            eprintln!("STATUS: error bad usage");
            return ExitCode::from(1);
        }
    };

    match commands::run(cli) {
        Ok(Outcome::Ok) => {
            eprintln!("STATUS: ok");
            ExitCode::SUCCESS
        }
        Ok(Outcome::Warn(reason)) => {
            eprintln!("STATUS: warn {reason}");
            ExitCode::from(2)
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            eprintln!("STATUS: error {err}");
            ExitCode::from(1)
        }
    }
}
