use std::process::ExitCode;

use clap::Parser;
use topirank::cli::{self, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match cli::execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => ExitCode::from(cli::report_error(&e) as u8),
    }
}
