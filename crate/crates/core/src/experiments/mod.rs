//! Named experiments: configuration, scenario generation, sweep runners and
//! CSV output.

pub mod config;
pub mod output;
mod runners;
pub mod scenario;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{ExperimentConfig, Sweep};
pub use output::{emit_csv, Cell, Manifest, ResultTable};
pub use runners::{build_setup, Setup};
pub use scenario::{generate_scenario, Scenario};

use crate::error::{Error, Result};

pub const EXPERIMENTS: [&str; 9] = [
    "nmse_vs_snr",
    "nmse_vs_N",
    "secrecy_vs_snr",
    "secrecy_vs_M",
    "secrecy_vs_N",
    "asymptotic_vs_N",
    "xi_sweep",
    "kappa_t_sweep",
    "phase_noise_sweep",
];

/// Run a named experiment. The configuration is validated before any
/// computation starts.
pub fn run_experiment(name: &str, config: &ExperimentConfig) -> Result<ResultTable> {
    let runner: fn(&ExperimentConfig) -> Result<ResultTable> = match name {
        "nmse_vs_snr" => runners::nmse_vs_snr,
        "nmse_vs_N" => runners::nmse_vs_n,
        "secrecy_vs_snr" => runners::secrecy_vs_snr,
        "secrecy_vs_M" => runners::secrecy_vs_m,
        "secrecy_vs_N" => runners::secrecy_vs_n,
        "asymptotic_vs_N" => runners::asymptotic_vs_n,
        "xi_sweep" => runners::xi_sweep,
        "kappa_t_sweep" => runners::kappa_t_sweep,
        "phase_noise_sweep" => runners::phase_noise_sweep,
        _ => {
            return Err(Error::UnknownExperiment {
                name: name.to_owned(),
                available: EXPERIMENTS.join(", "),
            })
        }
    };
    config.validate()?;
    runners::validate_sweep(name, config)?;
    runner(config)
}

/// Files produced by [`run_to_directory`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub csv: PathBuf,
    pub manifest: PathBuf,
    pub table: ResultTable,
}

/// Run an experiment and write `<name>.csv` and `manifest.json` into `dir`.
pub fn run_to_directory(name: &str, config: &ExperimentConfig, dir: &Path) -> Result<RunOutput> {
    let start = Instant::now();
    let table = run_experiment(name, config)?;
    let csv = dir.join(format!("{name}.csv"));
    emit_csv(&table, &csv)?;
    let manifest_path = dir.join("manifest.json");
    let manifest = Manifest {
        experiment: name.to_owned(),
        config_hash: config.hash(),
        seed: config.seed,
        version: env!("CARGO_PKG_VERSION").to_owned(),
        threads: rayon::current_num_threads(),
        wall_time_s: start.elapsed().as_secs_f64(),
        rows: table.rows.len(),
        csv: csv.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default(),
        notes: table.notes.clone(),
        warnings: table.warnings.clone(),
        config: serde_json::to_value(config).expect("configuration serializes"),
    };
    output::write_manifest(&manifest, &manifest_path)?;
    Ok(RunOutput {
        csv,
        manifest: manifest_path,
        table,
    })
}
