//! # acc
//!
//! Command-line front end for the ACC engine. Subcommands:
//!
//! - `evolve`   — run the genetic algorithm; writes `fitness_log.csv`,
//!   checkpoints, and `best.genome` (+ `.json` metadata).
//! - `evaluate` — score a saved genome on a split; writes `accuracy.csv`.
//! - `heatmap`  — visit-frequency heatmap; writes `heatmap.csv`/`heatmap.pgm`.
//! - `trace`    — one traced episode; writes `trace.jsonl`/`trace.pgm`.
//! - `synth`    — write the built-in synthetic digit bitmaps.
//!
//! Every run option can come from a flat `key = value` config file
//! (`--config`), with same-named CLI flags taking precedence. `--threads`
//! changes speed only, never results.

mod commands;
mod config;

use std::ffi::OsString;

use clap::Parser;

pub use config::RunConfig;

#[derive(Debug, Parser)]
#[command(
    name = "acc",
    version,
    about = "Evolve and analyze active categorical classifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: commands::Command,
}

/// Parse `argv` and run the selected subcommand, returning the process exit
/// status: 0 on success, 1 on runtime errors, 2 on usage errors.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return err.exit_code();
        }
    };
    match commands::run(cli.command) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err:#}");
            1
        }
    }
}
