//! One function per named experiment. Each sweeps a primary axis for every
//! value of a secondary "curve" parameter and reports closed-form columns next
//! to Monte Carlo columns with standard errors.

use super::config::{db_to_linear, ExperimentConfig, HardwareConfig, Sweep};
use super::output::{Cell, ResultTable};
use super::scenario::{generate_scenario, Scenario};
use crate::error::{Error, Result};
use crate::estimation::{nmse_high_power_limit, nmse_large_n_limit, HardwareProfile, PilotConfig};
use crate::geometry::{uniform_phase_shifts, ChannelModel, PhaseNoiseKind, SystemDimensions};
use crate::linalg::hermitian_eigenvalues;
use crate::montecarlo::{estimate_nmse, simulate, OracleEstimates, TrialPlan};
use crate::power::{grid_search_xi, optimal_xi, SplitCoefficients};
use crate::precoding::PowerAllocation;
use crate::rates::{
    secrecy_large_n, secrecy_power_scaled, secrecy_rate, secrecy_uncorrelated, LargeSurface, SplitTerms, UncorrelatedSystem,
};
use crate::rng::{domain, StreamFactory};
use crate::statistics::ChannelStatistics;

/// Everything needed to evaluate one configuration point.
#[derive(Debug, Clone)]
pub struct Setup {
    pub scenario: Scenario,
    pub model: ChannelModel,
    pub hw: HardwareProfile,
    pub pilots: PilotConfig,
    pub stats: ChannelStatistics,
}

impl Setup {
    pub fn allocation(&self, total_power: f64, xi: f64) -> Result<PowerAllocation> {
        PowerAllocation::new(total_power, xi, self.model.dims.m, self.model.dims.k)
    }
}

/// Scenario, channel model and statistics for `cfg`. The geometry and the
/// line-of-sight angles depend only on the seed.
pub fn build_setup(cfg: &ExperimentConfig) -> Result<Setup> {
    let s = cfg.system;
    let factory = StreamFactory::new(cfg.seed);
    let scenario = generate_scenario(&cfg.geometry, s.k, &factory)?;
    let dims = SystemDimensions::with_ris_elements(s.m, s.n, s.k, s.m_e, s.tau())?;
    let mut los = factory.stream(domain::LOS_ANGLES, 0);
    let model = ChannelModel::build(
        dims,
        &cfg.channel.correlation_spec(),
        scenario.fading.clone(),
        cfg.channel.phase_noise_model()?,
        uniform_phase_shifts(s.n, cfg.channel.phase_shift),
        &mut los,
    )?;
    let hw = cfg.hardware.profile();
    let pilots = PilotConfig::dft(dims.tau, s.k, cfg.power.pilot_power())?;
    let stats = ChannelStatistics::new(&model, &hw, &pilots)?;
    Ok(Setup {
        scenario,
        model,
        hw,
        pilots,
        stats,
    })
}

fn default_sweep(name: &str) -> Sweep {
    match name {
        "nmse_vs_snr" => Sweep::linear(-10.0, 30.0, 9),
        "secrecy_vs_snr" => Sweep::linear(-10.0, 20.0, 7),
        "secrecy_vs_M" => Sweep::linear(16.0, 128.0, 8),
        "asymptotic_vs_N" => Sweep::log(64.0, 4096.0, 7),
        "kappa_t_sweep" => Sweep::linear(0.0, 0.0225, 4),
        _ => Sweep::log(16.0, 1024.0, 7),
    }
}

fn default_curves(name: &str) -> Vec<f64> {
    match name {
        "nmse_vs_snr" | "secrecy_vs_snr" => vec![0.0, 0.0025, 0.01],
        "kappa_t_sweep" => vec![0.2, 0.9],
        "phase_noise_sweep" => vec![0.0, 0.5, 1.0],
        "xi_sweep" => vec![],
        _ => vec![0.0, 0.01],
    }
}

fn sweep(name: &str, cfg: &ExperimentConfig) -> Sweep {
    cfg.sweep.unwrap_or_else(|| default_sweep(name))
}

fn curves(name: &str, cfg: &ExperimentConfig) -> Vec<f64> {
    cfg.curves.clone().unwrap_or_else(|| default_curves(name))
}

/// Reject sweeps whose points are infeasible before anything is computed.
pub(super) fn validate_sweep(name: &str, cfg: &ExperimentConfig) -> Result<()> {
    let sw = sweep(name, cfg);
    let check_point = |c: &ExperimentConfig| c.validate();
    match name {
        "secrecy_vs_M" => {
            for m in sw.counts()? {
                let mut c = cfg.clone();
                c.system.m = m;
                check_point(&c)?;
            }
        }
        "nmse_vs_N" | "secrecy_vs_N" | "asymptotic_vs_N" | "phase_noise_sweep" => {
            sw.counts()?;
        }
        "xi_sweep" => {
            if cfg.sweep.is_some() {
                for xi in sw.values()? {
                    if !(xi > 0.0 && xi <= 1.0) {
                        return Err(Error::invalid("sweep", format!("ξ = {xi} lies outside (0, 1]")));
                    }
                }
            }
        }
        "kappa_t_sweep" => {
            for k in sw.values()? {
                if !(0.0..1.0).contains(&k) {
                    return Err(Error::invalid("sweep", format!("κ_t^BS = {k} lies outside [0, 1)")));
                }
            }
            for xi in curves(name, cfg) {
                if !(xi > 0.0 && xi <= 1.0) {
                    return Err(Error::invalid("curves", format!("ξ = {xi} lies outside (0, 1]")));
                }
            }
        }
        _ => {
            sw.values()?;
        }
    }
    if name != "xi_sweep" && curves(name, cfg).is_empty() {
        return Err(Error::Config("curve list is empty".into()));
    }
    if name == "phase_noise_sweep" {
        for v in curves(name, cfg) {
            if !(v >= 0.0) {
                return Err(Error::invalid("curves", format!("phase-noise variance {v} is negative")));
            }
        }
    }
    Ok(())
}

struct Run<'a> {
    cfg: &'a ExperimentConfig,
    hash: String,
    factory: StreamFactory,
    table: ResultTable,
}

impl<'a> Run<'a> {
    fn new(name: &str, cfg: &'a ExperimentConfig, columns: &[&str]) -> Self {
        Self {
            cfg,
            hash: cfg.hash(),
            factory: StreamFactory::new(cfg.seed).child(0x5EED),
            table: ResultTable::new(name, columns),
        }
    }

    fn plan(&self, curve: usize, point: usize) -> TrialPlan {
        let tag = ((curve as u64) << 32) | point as u64;
        self.cfg.trials.plan(self.factory.child(tag).master_seed())
    }

    fn push(&mut self, mut row: Vec<Cell>) {
        row.push(self.cfg.seed.into());
        row.push(self.hash.clone().into());
        self.table.push(row);
    }

    fn warn(&mut self, msg: String) {
        if !self.table.warnings.contains(&msg) {
            self.table.warnings.push(msg);
        }
    }

    /// Closed-form value, or NaN with a warning when the bound is outside its
    /// validity region at this point.
    fn closed(&mut self, label: &str, value: Result<f64>) -> Result<f64> {
        match value {
            Ok(v) => Ok(v),
            Err(e @ (Error::BoundInvalid(_) | Error::UnboundedEveCapacity(_) | Error::NoRealRoot(_))) => {
                self.warn(format!("{label}: {e}"));
                Ok(f64::NAN)
            }
            Err(e) => Err(e),
        }
    }

    fn finish(self) -> Result<ResultTable> {
        let table = self.table;
        let any_finite = table.rows.iter().any(|r| r.iter().any(|c| matches!(c, Cell::Float(v) if v.is_finite())));
        if !table.rows.is_empty() && !any_finite {
            return Err(Error::BoundInvalid(format!(
                "every point of `{}` is outside the validity region: {}",
                table.experiment,
                table.warnings.join("; ")
            )));
        }
        Ok(table)
    }
}

const SECRECY_COLUMNS: [&str; 9] = [
    "r_user_closed",
    "c_eve_closed",
    "r_sec_closed",
    "r_user_mc",
    "r_user_mc_se",
    "c_eve_mc",
    "c_eve_mc_se",
    "r_sec_mc",
    "r_sec_mc_se",
];

fn columns(head: &[&'static str], body: &[&'static str]) -> Vec<&'static str> {
    head.iter().chain(body).chain(&["seed", "config_hash"]).copied().collect()
}

/// `(R_k, C̄_E, R_sec)` from the closed forms, NaN where the bound is invalid.
fn closed_secrecy(run: &mut Run, label: &str, setup: &Setup, alloc: &PowerAllocation) -> Result<[f64; 3]> {
    let user = run.cfg.target_user;
    let t = setup.stats.traces(user);
    match secrecy_rate(&t, alloc, &setup.hw, setup.model.dims.m_e) {
        Ok(r) => Ok([r.user_rate, r.eve_capacity, r.secrecy_rate]),
        Err(e) => {
            let user_rate = crate::rates::user_rate(&t, alloc, &setup.hw);
            run.closed(label, Err(e))?;
            Ok([user_rate, f64::NAN, f64::NAN])
        }
    }
}

struct MonteCarloSecrecy {
    user: f64,
    user_se: f64,
    eve: f64,
    eve_se: f64,
    secrecy: f64,
    secrecy_se: f64,
}

fn mc_secrecy(est: &OracleEstimates, user: usize) -> MonteCarloSecrecy {
    let u = est.users[user].rate;
    let (eve, eve_se) = est.eve_capacity.get(user).map_or((0.0, 0.0), |e| (e.mean, e.se));
    MonteCarloSecrecy {
        user: u.mean,
        user_se: u.se,
        eve,
        eve_se,
        secrecy: (u.mean - eve).max(0.0),
        secrecy_se: u.se.hypot(eve_se),
    }
}

fn secrecy_cells(run: &mut Run, label: &str, setup: &Setup, alloc: &PowerAllocation, point: (usize, usize)) -> Result<Vec<Cell>> {
    let closed = closed_secrecy(run, label, setup, alloc)?;
    let est = simulate(&setup.model, &setup.stats, alloc, &run.plan(point.0, point.1))?;
    let mc = mc_secrecy(&est, run.cfg.target_user);
    Ok(vec![
        closed[0].into(),
        closed[1].into(),
        closed[2].into(),
        mc.user.into(),
        mc.user_se.into(),
        mc.eve.into(),
        mc.eve_se.into(),
        mc.secrecy.into(),
        mc.secrecy_se.into(),
    ])
}

fn with_kappa(cfg: &ExperimentConfig, kappa: f64) -> ExperimentConfig {
    let mut c = cfg.clone();
    c.hardware = HardwareConfig::uniform(kappa);
    c
}

pub(super) fn nmse_vs_snr(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let cols = columns(&["snr_db", "kappa"], &["nmse_closed", "nmse_floor", "nmse_mc", "nmse_mc_se"]);
    let mut run = Run::new("nmse_vs_snr", cfg, &cols);
    let user = cfg.target_user;
    for (ci, kappa) in curves("nmse_vs_snr", cfg).into_iter().enumerate() {
        for (pi, snr) in sweep("nmse_vs_snr", cfg).values()?.into_iter().enumerate() {
            let mut c = with_kappa(cfg, kappa);
            c.power.pilot_snr_db = Some(snr);
            let setup = build_setup(&c)?;
            let covs: Vec<_> = setup.stats.users.iter().map(|u| u.r.clone()).collect();
            let floor = nmse_high_power_limit(&covs, user, setup.pilots.tau, &setup.hw)?;
            let mc = estimate_nmse(&setup.model, &setup.stats, &run.plan(ci, pi))?[user];
            run.push(vec![snr.into(), kappa.into(), setup.stats.nmse(user).into(), floor.into(), mc.mean.into(), mc.se.into()]);
        }
    }
    run.finish()
}

pub(super) fn nmse_vs_n(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let cols = columns(&["n", "kappa"], &["nmse_closed", "nmse_large_n", "nmse_mc", "nmse_mc_se"]);
    let mut run = Run::new("nmse_vs_N", cfg, &cols);
    let user = cfg.target_user;
    for (ci, kappa) in curves("nmse_vs_N", cfg).into_iter().enumerate() {
        for (pi, n) in sweep("nmse_vs_N", cfg).counts()?.into_iter().enumerate() {
            let mut c = with_kappa(cfg, kappa);
            c.system.n = n;
            let setup = build_setup(&c)?;
            let f = &setup.model.fading;
            let large = nmse_large_n_limit(
                f.beta_direct_user[user],
                f.beta_ris_user[user],
                f.beta_1,
                n,
                setup.pilots.power,
                setup.pilots.tau,
                setup.hw.uplink_noise,
            );
            let mc = estimate_nmse(&setup.model, &setup.stats, &run.plan(ci, pi))?[user];
            run.push(vec![n.into(), kappa.into(), setup.stats.nmse(user).into(), large.into(), mc.mean.into(), mc.se.into()]);
        }
    }
    run.finish()
}

pub(super) fn secrecy_vs_snr(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let mut run = Run::new("secrecy_vs_snr", cfg, &columns(&["snr_db", "kappa"], &SECRECY_COLUMNS));
    for (ci, kappa) in curves("secrecy_vs_snr", cfg).into_iter().enumerate() {
        for (pi, snr) in sweep("secrecy_vs_snr", cfg).values()?.into_iter().enumerate() {
            let mut c = with_kappa(cfg, kappa);
            c.power.snr_db = snr;
            let setup = build_setup(&c)?;
            let alloc = setup.allocation(c.power.total_power(), c.power.xi)?;
            let label = format!("snr {snr} dB, kappa {kappa}");
            let mut row: Vec<Cell> = vec![snr.into(), kappa.into()];
            row.extend(secrecy_cells(&mut run, &label, &setup, &alloc, (ci, pi))?);
            run.push(row);
        }
    }
    run.finish()
}

pub(super) fn secrecy_vs_m(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let mut run = Run::new("secrecy_vs_M", cfg, &columns(&["m", "kappa"], &SECRECY_COLUMNS));
    for (ci, kappa) in curves("secrecy_vs_M", cfg).into_iter().enumerate() {
        for (pi, m) in sweep("secrecy_vs_M", cfg).counts()?.into_iter().enumerate() {
            let mut c = with_kappa(cfg, kappa);
            c.system.m = m;
            let setup = build_setup(&c)?;
            let alloc = setup.allocation(c.power.total_power(), c.power.xi)?;
            let label = format!("M {m}, kappa {kappa}");
            let mut row: Vec<Cell> = vec![m.into(), kappa.into()];
            row.extend(secrecy_cells(&mut run, &label, &setup, &alloc, (ci, pi))?);
            run.push(row);
        }
    }
    run.finish()
}

pub(super) fn secrecy_vs_n(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let mut body = SECRECY_COLUMNS.to_vec();
    body.push("r_sec_closed_no_ris");
    let mut run = Run::new("secrecy_vs_N", cfg, &columns(&["n", "kappa"], &body));
    for (ci, kappa) in curves("secrecy_vs_N", cfg).into_iter().enumerate() {
        for (pi, n) in sweep("secrecy_vs_N", cfg).counts()?.into_iter().enumerate() {
            let mut c = with_kappa(cfg, kappa);
            c.system.n = n;
            let setup = build_setup(&c)?;
            let alloc = setup.allocation(c.power.total_power(), c.power.xi)?;
            let label = format!("N {n}, kappa {kappa}");
            let mut row: Vec<Cell> = vec![n.into(), kappa.into()];
            row.extend(secrecy_cells(&mut run, &label, &setup, &alloc, (ci, pi))?);
            let mut fading = setup.model.fading.clone();
            fading.beta_ris_user.iter_mut().for_each(|b| *b = 0.0);
            fading.beta_ris_eve = 0.0;
            let direct_only = Setup {
                stats: ChannelStatistics::new(&setup.model.with_fading(fading)?, &setup.hw, &setup.pilots)?,
                ..setup.clone()
            };
            let no_ris = closed_secrecy(&mut run, &format!("{label}, no RIS"), &direct_only, &alloc)?[2];
            row.push(no_ris.into());
            run.push(row);
        }
    }
    run.finish()
}

pub(super) fn asymptotic_vs_n(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let cols = columns(
        &["n", "kappa"],
        &[
            "r_sec_closed",
            "r_sec_uncorrelated",
            "r_sec_large_n",
            "r_sec_power_scaled",
            "r_sec_mc",
            "r_sec_mc_se",
        ],
    );
    let mut run = Run::new("asymptotic_vs_N", cfg, &cols);
    let user = cfg.target_user;
    let e_u = db_to_linear(cfg.power.e_u_db);
    for (ci, kappa) in curves("asymptotic_vs_N", cfg).into_iter().enumerate() {
        for (pi, n) in sweep("asymptotic_vs_N", cfg).counts()?.into_iter().enumerate() {
            let mut c = cfg.clone();
            c.system.n = n;
            // ideal uplink hardware, impaired downlink
            c.hardware = HardwareConfig {
                kappa_t_ue: 0.0,
                kappa_r_bs: 0.0,
                kappa_t_bs: kappa,
                kappa_r_ue: kappa,
            };
            c.channel.ris_correlated = false;
            c.channel.bs_correlation = 0.0;
            c.channel.phase_noise = PhaseNoiseKind::None;
            c.channel.phase_noise_variance = 0.0;
            let setup = build_setup(&c)?;
            let d = setup.model.dims;
            let alloc = setup.allocation(e_u / n as f64, c.power.xi)?;
            let label = format!("N {n}, kappa {kappa}");
            let [_, _, general] = closed_secrecy(&mut run, &label, &setup, &alloc)?;

            let f = &setup.model.fading;
            let sys = UncorrelatedSystem {
                los_eigenvalues: hermitian_eigenvalues(setup.model.los_gram()),
                k: d.k,
                tau: d.tau,
                pilot_power: setup.pilots.power,
                beta_direct_user: f.beta_direct_user.clone(),
                beta_ris_user: f.beta_ris_user.clone(),
                beta_direct_eve: f.beta_direct_eve,
                beta_ris_eve: f.beta_ris_eve,
            };
            let unc = secrecy_uncorrelated(&sys, user, &alloc, &setup.hw, d.m_e).map(|r| r.secrecy_rate);
            let unc = run.closed(&label, unc)?;
            let surface = LargeSurface {
                m: d.m,
                n,
                k: d.k,
                tau: d.tau,
                pilot_power: setup.pilots.power,
                beta_1: f.beta_1,
                beta_direct: f.beta_direct_user[user],
                beta_ris: f.beta_ris_user[user],
                beta_direct_eve: f.beta_direct_eve,
                beta_ris_eve: f.beta_ris_eve,
            };
            let large = secrecy_large_n(&surface, &alloc, &setup.hw, d.m_e).map(|r| r.secrecy_rate);
            let large = run.closed(&label, large)?;
            let scaled = secrecy_power_scaled(e_u, f.beta_ris_user[user], f.beta_1, d.m, d.k, d.m_e, c.power.xi, &setup.hw)
                .map(|r| r.secrecy_rate);
            let scaled = run.closed(&label, scaled)?;
            let est = simulate(&setup.model, &setup.stats, &alloc, &run.plan(ci, pi))?;
            let mc = mc_secrecy(&est, user);
            run.push(vec![
                n.into(),
                kappa.into(),
                general.into(),
                unc.into(),
                large.into(),
                scaled.into(),
                mc.secrecy.into(),
                mc.secrecy_se.into(),
            ]);
        }
    }
    run.finish()
}

pub(super) fn xi_sweep(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let cols = columns(&["xi"], &["r_sec_closed", "r_sec_eq40", "r_sec_mc", "r_sec_mc_se"]);
    let mut run = Run::new("xi_sweep", cfg, &cols);
    let setup = build_setup(cfg)?;
    let user = cfg.target_user;
    let t = setup.stats.traces(user);
    let p_t = cfg.power.total_power();
    let split = SplitTerms::new(&t, &setup.hw, p_t);
    let m_e = setup.model.dims.m_e;
    let grid: Vec<f64> = match &cfg.sweep {
        Some(s) => s.values()?,
        None => {
            let n = (1.0 / cfg.xi_grid_step).round() as usize;
            (1..=n).map(|i| (i as f64 * cfg.xi_grid_step).min(1.0)).collect()
        }
    };
    for (pi, xi) in grid.into_iter().enumerate() {
        let alloc = setup.allocation(p_t, xi)?;
        let label = format!("xi {xi}");
        let [_, _, composed] = closed_secrecy(&mut run, &label, &setup, &alloc)?;
        let eq40 = split.secrecy_difference(xi, m_e).map(|d| d.max(0.0));
        let eq40 = run.closed(&label, eq40)?;
        let est = simulate(&setup.model, &setup.stats, &alloc, &run.plan(0, pi))?;
        let mc = mc_secrecy(&est, user);
        run.push(vec![xi.into(), composed.into(), eq40.into(), mc.secrecy.into(), mc.secrecy_se.into()]);
    }
    let coeffs = SplitCoefficients::new(&split, m_e);
    match optimal_xi(&coeffs) {
        Ok(sol) => run.table.note("xi_star", &sol),
        Err(e) => run.warn(format!("closed-form optimum: {e}")),
    }
    let fine = grid_search_xi(&split, m_e, 1e-3)?;
    run.table.note("xi_grid_argmax", fine.argmax);
    run.table.note("r_sec_grid_max", fine.max_rate);
    run.finish()
}

pub(super) fn kappa_t_sweep(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let cols = columns(&["kappa_t_bs", "xi"], &["r_sec_closed", "r_sec_mc", "r_sec_mc_se"]);
    let mut run = Run::new("kappa_t_sweep", cfg, &cols);
    for (ci, xi) in curves("kappa_t_sweep", cfg).into_iter().enumerate() {
        for (pi, kt) in sweep("kappa_t_sweep", cfg).values()?.into_iter().enumerate() {
            let mut c = cfg.clone();
            c.hardware.kappa_t_bs = kt;
            c.power.xi = xi;
            let setup = build_setup(&c)?;
            let alloc = setup.allocation(c.power.total_power(), xi)?;
            let label = format!("kappa_t_bs {kt}, xi {xi}");
            let [_, _, closed] = closed_secrecy(&mut run, &label, &setup, &alloc)?;
            let est = simulate(&setup.model, &setup.stats, &alloc, &run.plan(ci, pi))?;
            let mc = mc_secrecy(&est, c.target_user);
            run.push(vec![kt.into(), xi.into(), closed.into(), mc.secrecy.into(), mc.secrecy_se.into()]);
        }
    }
    run.finish()
}

pub(super) fn phase_noise_sweep(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let cols = columns(&["n", "phase_noise_variance"], &["r_sec_closed", "r_sec_mc", "r_sec_mc_se"]);
    let mut run = Run::new("phase_noise_sweep", cfg, &cols);
    let mut needed = Vec::new();
    for (ci, var) in curves("phase_noise_sweep", cfg).into_iter().enumerate() {
        let mut first_hit = None;
        for (pi, n) in sweep("phase_noise_sweep", cfg).counts()?.into_iter().enumerate() {
            let mut c = with_kappa(cfg, 0.0);
            c.system.n = n;
            c.channel.phase_noise_variance = var;
            let setup = build_setup(&c)?;
            let alloc = setup.allocation(c.power.total_power(), c.power.xi)?;
            let label = format!("N {n}, phase-noise variance {var}");
            let [_, _, closed] = closed_secrecy(&mut run, &label, &setup, &alloc)?;
            if first_hit.is_none() && closed >= cfg.target_rate {
                first_hit = Some(n);
            }
            let est = simulate(&setup.model, &setup.stats, &alloc, &run.plan(ci, pi))?;
            let mc = mc_secrecy(&est, c.target_user);
            run.push(vec![n.into(), var.into(), closed.into(), mc.secrecy.into(), mc.secrecy_se.into()]);
        }
        needed.push(serde_json::json!({ "phase_noise_variance": var, "n_for_target": first_hit }));
    }
    run.table.note("target_rate", cfg.target_rate);
    run.table.note("n_for_target", needed);
    run.finish()
}
