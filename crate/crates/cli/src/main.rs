//! `randmarket`: drive the exchange operators, run the particle gas, and
//! report middle-class statistics of confined equilibria.
//!
//! Exit codes: 0 success, 1 usage or runtime error, 2 a checked property
//! failed (entropy ordering under a gated operator, scan monotonicity).

mod commands;
mod config;

use clap::error::ErrorKind;
use clap::Parser;

fn main() {
    let cli = match config::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match commands::run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}
