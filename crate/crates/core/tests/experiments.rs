//! End-to-end checks of the experiment runners and CSV output.

use rislab::experiments::{emit_csv, run_experiment, run_to_directory, ExperimentConfig, Sweep, EXPERIMENTS};
use rislab::Error;

fn quick() -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.system.m = 16;
    c.system.n = 16;
    c.system.k = 2;
    c.system.m_e = 2;
    c.trials.blocks = 16;
    c.trials.calibration_blocks = 16;
    c
}

#[test]
fn xi_sweep_header_is_fixed() {
    let mut c = quick();
    c.xi_grid_step = 0.05;
    let t = run_experiment("xi_sweep", &c).unwrap();
    assert_eq!(t.columns, ["xi", "r_sec_closed", "r_sec_eq40", "r_sec_mc", "r_sec_mc_se", "seed", "config_hash"]);
    assert_eq!(t.rows.len(), 20);
    assert!(t.notes.contains_key("xi_star"));
    assert!(t.notes.contains_key("xi_grid_argmax"));
}

#[test]
fn every_oracle_column_has_an_error_column() {
    let mut c = quick();
    c.sweep = Some(Sweep::log(16.0, 32.0, 2));
    c.curves = Some(vec![0.0]);
    for name in ["nmse_vs_N", "secrecy_vs_N", "asymptotic_vs_N", "phase_noise_sweep"] {
        let t = run_experiment(name, &c).unwrap();
        for col in t.columns.iter().filter(|c| c.ends_with("_mc")) {
            assert!(t.column(&format!("{col}_se")).is_some(), "{name}: {col} lacks a standard error");
        }
        assert_eq!(t.columns[t.columns.len() - 2..], ["seed", "config_hash"]);
    }
}

#[test]
fn unknown_experiment_lists_names() {
    let err = run_experiment("fig11", &quick()).unwrap_err();
    match &err {
        Error::UnknownExperiment { available, .. } => {
            for name in EXPERIMENTS {
                assert!(available.contains(name));
            }
        }
        other => panic!("unexpected error {other:?}"),
    }
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn infeasible_config_is_rejected_before_compute() {
    let mut c = quick();
    c.system.k = 16;
    let err = run_experiment("secrecy_vs_snr", &c).unwrap_err();
    assert_eq!(err.exit_code(), 2);

    let mut c = quick();
    c.sweep = Some(Sweep::linear(2.0, 40.0, 3));
    let err = run_experiment("secrecy_vs_M", &c).unwrap_err();
    assert_eq!(err.exit_code(), 2, "{err}");
}

#[test]
fn rerun_gives_identical_files() {
    let mut c = quick();
    c.sweep = Some(Sweep::linear(0.0, 10.0, 3));
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let x = run_to_directory("secrecy_vs_snr", &c, a.path()).unwrap();
    let y = run_to_directory("secrecy_vs_snr", &c, b.path()).unwrap();
    assert_eq!(std::fs::read(x.csv).unwrap(), std::fs::read(y.csv).unwrap());
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(x.manifest).unwrap()).unwrap();
    assert_eq!(manifest["config_hash"], c.hash());
    assert_eq!(manifest["rows"], 9);
}

#[test]
fn empty_table_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.csv");
    let t = rislab::experiments::ResultTable::new("x", &["a"]);
    assert!(emit_csv(&t, &path).is_err());
    assert!(!path.exists());
}

#[test]
fn ideal_nmse_decreases_over_snr() {
    let mut c = quick();
    c.curves = Some(vec![0.0]);
    let t = run_experiment("nmse_vs_snr", &c).unwrap();
    let v = t.values("nmse_closed").unwrap();
    assert!(v.windows(2).all(|w| w[1] < w[0]), "{v:?}");
}

#[test]
fn secrecy_saturates_with_surface_size_under_impairments() {
    // The RIS path overtakes the direct one only for N in the thousands, so
    // the saturation shows on a large uncorrelated surface.
    let mut c = ExperimentConfig::default();
    c.channel.ris_correlated = false;
    c.trials.blocks = 2;
    c.trials.calibration_blocks = 2;
    c.curves = Some(vec![0.01]);
    c.sweep = Some(Sweep::log(16384.0, 65536.0, 2));
    let t = run_experiment("secrecy_vs_N", &c).unwrap();
    let r = t.values("r_sec_closed").unwrap();
    assert!(r[1] > r[0]);
    assert!((r[1] - r[0]) / r[1] < 0.02, "{r:?}");
}

#[test]
fn transmit_distortion_trend_follows_the_split() {
    let mut c = quick();
    c.system.m = 32;
    c.curves = Some(vec![0.2]);
    c.sweep = Some(Sweep::linear(0.0, 0.01, 3));
    let t = run_experiment("kappa_t_sweep", &c).unwrap();
    let r = t.values("r_sec_closed").unwrap();
    assert!(r.windows(2).all(|w| w[1] <= w[0]), "{r:?}");
}
