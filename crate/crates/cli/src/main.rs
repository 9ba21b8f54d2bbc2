//! `decolab` — run conditioned-state dynamics experiments from JSON
//! configs and emit plot-ready CSV/JSON.

mod commands;
mod config;
mod output;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use output::OutputDir;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "decolab",
    version,
    about = "Stochastic conditioned-state dynamics lab"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monitored-particle trajectories (localization, jumps, ensembles).
    Localize(RunArgs),
    /// Two-packet weight collapse and Born-rule statistics.
    Collapse(RunArgs),
    /// Jump unravelling of a finite-dimensional Lindblad model.
    Unravel(RunArgs),
    /// Measurement-chain branch trees and consistency reports.
    Frames(RunArgs),
    /// Pointer-state scale estimates in physical units.
    Scales(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the config's RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn load<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

fn init_threads(threads: Option<usize>) {
    let env_threads = std::env::var("DECOLAB_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok());
    if let Some(n) = env_threads.or(threads) {
        // ignore failure if a global pool already exists
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Localize(args) => {
            let cfg: config::LocalizeConfig = load(&args.config)?;
            init_threads(cfg.threads);
            let out = OutputDir::new(&args.out)?;
            commands::localize::run(&cfg, args.seed, &out)
        }
        Command::Collapse(args) => {
            let cfg: config::CollapseConfig = load(&args.config)?;
            init_threads(cfg.threads);
            let out = OutputDir::new(&args.out)?;
            commands::collapse::run(&cfg, args.seed, &out)
        }
        Command::Unravel(args) => {
            let cfg: config::UnravelConfig = load(&args.config)?;
            init_threads(cfg.threads);
            let out = OutputDir::new(&args.out)?;
            commands::unravel::run(&cfg, args.seed, &out)
        }
        Command::Frames(args) => {
            let cfg: config::FramesConfig = load(&args.config)?;
            init_threads(cfg.threads);
            let out = OutputDir::new(&args.out)?;
            commands::frames::run(&cfg, args.seed, &out)
        }
        Command::Scales(args) => {
            let cfg: config::ScalesConfig = load(&args.config)?;
            init_threads(cfg.threads);
            let out = OutputDir::new(&args.out)?;
            commands::scales::run(&cfg, &out)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    // remember the output dir for the failure report
    let out_dir = match &cli.command {
        Command::Localize(a)
        | Command::Collapse(a)
        | Command::Unravel(a)
        | Command::Frames(a)
        | Command::Scales(a) => a.out.clone(),
    };
    match dispatch(cli) {
        Ok(true) => std::process::exit(0),
        Ok(false) => {
            let failure = serde_json::json!({
                "status": "assertions_failed",
                "detail": "one or more requested assertions did not hold; see the report files",
            });
            let _ = std::fs::create_dir_all(&out_dir);
            let _ = std::fs::write(
                out_dir.join("failure.json"),
                serde_json::to_string_pretty(&failure).unwrap(),
            );
            eprintln!("{failure}");
            std::process::exit(1);
        }
        Err(err) => {
            let failure = serde_json::json!({
                "status": "error",
                "detail": format!("{err:#}"),
            });
            let _ = std::fs::create_dir_all(&out_dir);
            let _ = std::fs::write(
                out_dir.join("failure.json"),
                serde_json::to_string_pretty(&failure).unwrap(),
            );
            eprintln!("{failure}");
            std::process::exit(1);
        }
    }
}
