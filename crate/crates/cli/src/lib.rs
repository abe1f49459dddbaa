//! Command-line orchestration for the radar-camera alignment toolkit.

pub mod args;
pub mod commands;
pub mod error;
pub mod settings;

use std::ffi::OsString;

use clap::Parser;

pub use args::{Cli, Command};
pub use error::{CliError, CliResult, EXIT_CONFIG, EXIT_IO, EXIT_OK, EXIT_VALIDATION};

pub fn run(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Synth(a) => commands::synth::run(a),
        Command::Rasterize(a) => commands::rasterize::run(a),
        Command::Metrics(a) => commands::metrics::run(a),
        Command::FuseCheck(a) => commands::fuse::run(a),
        Command::Report(a) => commands::report::run(a),
        Command::Convert(a) => commands::convert::run(a),
    }
}

/// Parse arguments, run, print, and return the process exit code.
/// Usage errors count as config errors.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(msg) => {
            println!("{msg}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("rfk: {e}");
            e.exit_code()
        }
    }
}
