mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::Context;
use config::{load_config, CliError};

fn run(cli: Cli) -> Result<(), CliError> {
    let config = load_config(cli.config.as_deref())?;
    if let Some(n) = cli.threads.or(config.threads) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads {n}: {e}")))?;
    }
    let ctx = Context {
        config_dir: cli
            .config
            .as_deref()
            .and_then(|p| p.parent())
            .map(|p| p.to_path_buf()),
        config,
        seed: cli.seed,
    };
    match &cli.command {
        Command::Simulate(a) => commands::simulate(&ctx, a),
        Command::Audit(a) => commands::audit(a),
        Command::Bounds(a) => commands::bounds(a),
        Command::Feasibility(a) => commands::feasibility(a),
        Command::ScanWindow(a) => commands::scan_window(&ctx, a),
        Command::Validate(a) => commands::validate(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
