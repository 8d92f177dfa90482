use std::process::ExitCode;

use clap::Parser;
use twr_cli::{resolve_config, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = resolve_config(&cli.command)
        .map(|c| c.output.verbosity)
        .unwrap_or_else(|_| "warn".into());
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("twr: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
