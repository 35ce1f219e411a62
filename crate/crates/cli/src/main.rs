//! Command-line front end: closed forms, path simulation, boundary-value
//! solves, figure data bundles, and three-route triangulation reports.
//!
//! Outputs are UTF-8 CSV files with LF line endings and 17-significant-digit
//! floats; every output file gets a `.manifest` sidecar (plain `key = value`
//! lines) that reproduces the run bit-exactly when fed back via `--config`.
//!
//! Exit codes: 0 success, 1 usage or parse error, 2 statistical-quality
//! warning (censored fraction above 1/2), 3 solver failure.

mod commands;
mod config;
mod output;

use clap::error::ErrorKind;
use clap::Parser;
use commands::Cli;

fn main() {
    let argv = match config::expand_config_args() {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e)
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) =>
        {
            print!("{e}");
            std::process::exit(0);
        }
        Err(e) => {
            eprint!("{e}");
            std::process::exit(1);
        }
    };
    match commands::run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
