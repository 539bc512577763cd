//! Batch front-end: loads a [`config::RunConfig`], runs one experiment and writes its
//! reports together with a `manifest.json`.

pub mod commands;
pub mod config;
pub mod output;

use commands::{Command, RunError};
use config::RunConfig;
use output::{sha256_hex, Manifest, OutputDir, Versions};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Where the run gets its configuration and puts its files.
#[derive(Debug, Clone, Default)]
pub struct Invocation {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

#[derive(Serialize)]
struct Diagnostic<'a> {
    command: &'a str,
    kind: &'a str,
    exit_code: i32,
    message: String,
}

fn load(inv: &Invocation) -> Result<RunConfig, RunError> {
    match &inv.config {
        Some(path) => RunConfig::load(path).map_err(RunError::Config),
        None => Ok(RunConfig::default()),
    }
}

/// Runs `command` and returns the process exit code.
pub fn run(command: Command, inv: &Invocation) -> i32 {
    let start = Instant::now();
    let mut cfg = match load(inv) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("{e}");
            return e.exit_code();
        }
    };
    if let Some(dir) = &inv.out {
        cfg.output.dir = dir.to_string_lossy().into_owned();
    }
    let workers = inv.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())).max(1);
    let mut out = match OutputDir::create(Path::new(&cfg.output.dir)) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("i/o error: {e:#}");
            return 1;
        }
    };
    let config_json = cfg.to_json();
    let outcome = out
        .write("config.json", format!("{config_json}\n").as_bytes())
        .map_err(RunError::from)
        .and_then(|()| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| RunError::Io(anyhow::anyhow!("building worker pool: {e}")))?;
            log::info!("{} with {workers} workers into {}", command.name(), out.path().display());
            pool.install(|| commands::execute(command, &cfg, &mut out))
        });

    let (status, code) = match &outcome {
        Ok(()) => ("ok".to_string(), 0),
        Err(e) => {
            eprintln!("{e}");
            let kind = match e {
                RunError::Config(_) => "config",
                RunError::Numerical(_) => "numerical",
                RunError::Io(_) => "io",
            };
            let diag = Diagnostic { command: command.name(), kind, exit_code: e.exit_code(), message: e.to_string() };
            if let Err(werr) = out.write_json("diagnostic.json", &diag) {
                eprintln!("i/o error: {werr:#}");
            }
            (kind.to_string(), e.exit_code())
        }
    };
    let manifest = Manifest {
        command: command.name().into(),
        status,
        config_sha256: sha256_hex(config_json.as_bytes()),
        seed: cfg.seed,
        versions: Versions::default(),
        workers,
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs: out.written().to_vec(),
    };
    if let Err(e) = out.write_json("manifest.json", &manifest) {
        eprintln!("i/o error: {e:#}");
        return if code == 0 { 1 } else { code };
    }
    code
}
