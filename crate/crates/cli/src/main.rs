//! `simulate <experiment> [--config file] [--seed S] [--out dir] [--paper-scale] [--trials N]`
//!
//! Writes `<experiment>.csv` and `manifest.json` into the output directory.
//! `RIS_LAB_THREADS` caps the worker pool.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use rislab::experiments::{run_to_directory, ExperimentConfig};
use rislab::Error;

#[derive(Debug, Parser)]
#[command(name = "simulate", version, about = "Run a named RIS secrecy experiment")]
struct Args {
    /// Experiment name.
    experiment: String,
    /// JSON configuration file; missing fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the file.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Use the full-size array dimensions (M = 128, N = 196).
    #[arg(long)]
    paper_scale: bool,
    /// Monte Carlo blocks per sweep point, overriding the file.
    #[arg(long)]
    trials: Option<usize>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    print_config: bool,
}

fn resolve(args: &Args) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            ExperimentConfig::from_json(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if args.paper_scale {
        cfg = cfg.paper_scale();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(blocks) = args.trials {
        cfg.trials.blocks = blocks;
    }
    Ok(cfg)
}

fn init_threads() -> Result<(), Error> {
    let Ok(value) = std::env::var("RIS_LAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("RIS_LAB_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Config(format!("cannot size the worker pool: {e}")))
}

fn run(args: &Args) -> Result<(), Error> {
    init_threads()?;
    let cfg = resolve(args)?;
    if args.print_config {
        println!("{}", cfg.to_json_pretty());
        return Ok(());
    }
    let out = run_to_directory(&args.experiment, &cfg, &args.out)?;
    for w in &out.table.warnings {
        eprintln!("warning: {w}");
    }
    println!("{} rows -> {}", out.table.rows.len(), out.csv.display());
    println!("manifest -> {}", out.manifest.display());
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
