use clap::Parser;
use squeeze_spectra::commands::Command;
use squeeze_spectra::{run, Invocation};
use std::path::PathBuf;
use std::process::ExitCode;

/// Thin-domain spectra, gap certificates and inertial-manifold reductions.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    /// Experiment to run.
    #[arg(value_enum)]
    command: Command,
    /// JSON run configuration; defaults are used when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for independent jobs.
    #[arg(long, env = "SQUEEZE_SPECTRA_WORKERS")]
    workers: Option<usize>,
    #[arg(long, short)]
    verbose: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let inv = Invocation { config: cli.config, out: cli.out, workers: cli.workers };
    ExitCode::from(run(cli.command, &inv) as u8)
}
