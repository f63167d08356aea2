//! `curalens`: operator command line for rubric audits of dataset
//! documentation.
//!
//! The store root comes from `--store` or `CURALENS_STORE`, the campaign
//! from `--campaign` or `CURALENS_CAMPAIGN`. Output is human-readable unless
//! `--format doc` is given. On failure the command prints
//! `{"error": {"code", "message"}}` on stderr and exits with status 1.

mod args;
mod commands;
mod human;

use std::process::ExitCode;

use clap::Parser;
use curalens_core::error::ErrorBody;
use curalens_core::Coded;

fn main() -> ExitCode {
    let cli = args::Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", ErrorBody::new(err.code(), &err).to_json());
            ExitCode::FAILURE
        }
    }
}
