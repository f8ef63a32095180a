//! Batch front-end: parse an experiment config, run the requested task
//! pipeline, and emit CSV/JSON/SVG artifacts plus a manifest.
//!
//! Outputs are deterministic for a fixed config: no timestamps, fixed
//! reduction orders, seeded iteration everywhere.

mod config;
mod svg;
mod tasks;

use clap::Parser;
use config::ExperimentConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "nls-peaks",
    about = "Multi-peak solutions of coupled nonlinear Schrodinger systems: \
             reduced-energy scans, 3D solves, spectra and identity checks"
)]
struct Cli {
    /// Task: ground-state | reduced-scan | solve | spectrum | pohozaev |
    /// decay | full-pipeline | asymptotics
    task: String,
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Worker threads for scans (results are identical for any value).
    #[arg(long)]
    threads: Option<usize>,
    /// Override solver.resolution (grid spacing h).
    #[arg(long)]
    resolution: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("config error at `{}`: {e}", cli.config.display());
            return ExitCode::from(2);
        }
    };
    let mut cfg = match ExperimentConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    if let Some(h) = cli.resolution {
        cfg.solver.resolution = h;
    }
    let threads = cli
        .threads
        .or_else(|| {
            std::env::var("NLS_PEAKS_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(1)
        .max(1);
    // the CLI positional task overrides the config's task field
    let task = cli.task.clone();
    if !config::TASKS.contains(&task.as_str()) {
        eprintln!("config error at `task`: unknown task `{task}`");
        return ExitCode::from(2);
    }
    if let Err(e) = std::fs::create_dir_all(&cli.out) {
        eprintln!("config error at `--out`: {e}");
        return ExitCode::from(2);
    }
    match tasks::run(&task, &cfg, &text, &cli.out, threads) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("task `{task}` failed: {e}");
            ExitCode::from(3)
        }
    }
}
