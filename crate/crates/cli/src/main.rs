//! `periomega`: batch driver for periodic-set, recurrence, cascade,
//! Sharkovskii and entropy computations.

mod cli;
mod config;
mod error;
mod json;
mod run;

use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let args = match cli::Args::try_parse() {
        Ok(args) => args,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match cli::execute(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("periomega: {e}");
            e.exit_code()
        }
    }
}
