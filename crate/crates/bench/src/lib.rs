//! Shared fixtures for the benchmarks in `benches/`.

use rislab::experiments::{build_setup, ExperimentConfig, Setup};

/// Default scenario resized to `m` antennas and `n` RIS elements.
pub fn fixture(m: usize, n: usize) -> (ExperimentConfig, Setup) {
    let mut cfg = ExperimentConfig::default();
    cfg.system.m = m;
    cfg.system.n = n;
    let setup = build_setup(&cfg).expect("default scenario is valid");
    (cfg, setup)
}
