//! JSON experiment configuration.
//!
//! Every field has a default, so `{}` is a valid configuration describing the
//! desk-scale reference system. Unknown fields are rejected to catch typos.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::estimation::HardwareProfile;
use crate::geometry::{CorrelationSpec, PhaseNoiseKind, PhaseNoiseModel, RisCorrelationModel};
use crate::montecarlo::{DistortionStatistics, TrialPlan};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub system: SystemConfig,
    pub power: PowerConfig,
    pub hardware: HardwareConfig,
    pub channel: ChannelConfig,
    pub geometry: GeometryConfig,
    /// Primary sweep axis; each experiment has its own default.
    pub sweep: Option<Sweep>,
    /// Values of the secondary parameter that distinguishes curves.
    pub curves: Option<Vec<f64>>,
    pub trials: TrialsConfig,
    /// Grid step of the power-split search.
    pub xi_grid_step: f64,
    /// Secrecy rate the phase-noise experiment solves for, bits/s/Hz.
    pub target_rate: f64,
    /// User whose secrecy rate is reported.
    pub target_user: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            system: SystemConfig::default(),
            power: PowerConfig::default(),
            hardware: HardwareConfig::default(),
            channel: ChannelConfig::default(),
            geometry: GeometryConfig::default(),
            sweep: None,
            curves: None,
            trials: TrialsConfig::default(),
            xi_grid_step: 0.05,
            target_rate: 1.6,
            target_user: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub m_e: usize,
    /// Pilot length; `None` uses `τ = K`.
    pub tau: Option<usize>,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            m: 64,
            n: 100,
            k: 6,
            m_e: 4,
            tau: None,
        }
    }
}

impl SystemConfig {
    pub fn tau(&self) -> usize {
        self.tau.unwrap_or(self.k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerConfig {
    /// Downlink SNR `P_t/σ_k²` in dB with `σ_k² = 1`.
    pub snr_db: f64,
    /// Uplink pilot SNR `ρ/σ_u²` in dB; `None` follows `snr_db`.
    pub pilot_snr_db: Option<f64>,
    pub xi: f64,
    /// Power-scaling constant `E_u` in dB for `P_t = E_u/N` experiments.
    pub e_u_db: f64,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self {
            snr_db: 0.0,
            pilot_snr_db: None,
            xi: 0.5,
            e_u_db: 20.0,
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl PowerConfig {
    pub fn total_power(&self) -> f64 {
        db_to_linear(self.snr_db)
    }

    pub fn pilot_power(&self) -> f64 {
        db_to_linear(self.pilot_snr_db.unwrap_or(self.snr_db))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HardwareConfig {
    pub kappa_t_ue: f64,
    pub kappa_r_bs: f64,
    pub kappa_t_bs: f64,
    pub kappa_r_ue: f64,
}

impl Default for HardwareConfig {
    fn default() -> Self {
        Self::uniform(0.01)
    }
}

impl HardwareConfig {
    pub fn uniform(kappa: f64) -> Self {
        Self {
            kappa_t_ue: kappa,
            kappa_r_bs: kappa,
            kappa_t_bs: kappa,
            kappa_r_ue: kappa,
        }
    }

    pub fn profile(&self) -> HardwareProfile {
        HardwareProfile {
            kappa_t_ue: self.kappa_t_ue,
            kappa_r_bs: self.kappa_r_bs,
            kappa_t_bs: self.kappa_t_bs,
            kappa_r_ue: self.kappa_r_ue,
            uplink_noise: 1.0,
            downlink_noise: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub bs_correlation: f64,
    /// Horizontal and vertical RIS element spacing in wavelengths.
    pub ris_spacing_wavelengths: f64,
    pub ris_correlated: bool,
    pub wavelength: f64,
    pub phase_noise: PhaseNoiseKind,
    pub phase_noise_variance: f64,
    /// Common RIS phase shift, radians.
    pub phase_shift: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            bs_correlation: 0.6,
            ris_spacing_wavelengths: 0.5,
            ris_correlated: true,
            wavelength: 0.1,
            phase_noise: PhaseNoiseKind::VonMises,
            phase_noise_variance: 0.1,
            phase_shift: std::f64::consts::FRAC_PI_4,
        }
    }
}

impl ChannelConfig {
    pub fn correlation_spec(&self) -> CorrelationSpec {
        let base = CorrelationSpec::default();
        let spacing = self.ris_spacing_wavelengths * self.wavelength;
        CorrelationSpec {
            bs_correlation: self.bs_correlation,
            spacing_h: spacing,
            spacing_v: spacing,
            wavelength: self.wavelength,
            bs_spacing: base.bs_spacing / base.wavelength * self.wavelength,
            ris_spacing: base.ris_spacing / base.wavelength * self.wavelength,
            ris_model: if self.ris_correlated {
                RisCorrelationModel::Sinc
            } else {
                RisCorrelationModel::Uncorrelated
            },
        }
    }

    pub fn phase_noise_model(&self) -> Result<PhaseNoiseModel> {
        PhaseNoiseModel::new(self.phase_noise, self.phase_noise_variance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub circle_radius: f64,
    /// Distance from the BS to the centre of the user circle.
    pub bs_center_distance: f64,
    /// Distance from the RIS to the centre of the user circle.
    pub ris_center_distance: f64,
    pub bs_ris_distance: f64,
    pub exponent_ris: f64,
    pub exponent_direct: f64,
    /// Gain applied to every user- and Eve-side path loss, dB. Absorbs antenna
    /// gains so that the SNR axis spans a useful range with `σ² = 1`.
    pub receiver_gain_db: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            circle_radius: 50.0,
            bs_center_distance: 200.0,
            ris_center_distance: 100.0,
            bs_ris_distance: 150.0,
            exponent_ris: 2.1,
            exponent_direct: 3.2,
            receiver_gain_db: 110.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialsConfig {
    pub blocks: usize,
    pub calibration_blocks: usize,
    /// Pilot redraws per channel realization in NMSE experiments.
    pub pilot_draws: usize,
    pub distortion: DistortionStatistics,
}

impl Default for TrialsConfig {
    fn default() -> Self {
        Self {
            blocks: 200,
            calibration_blocks: 200,
            pilot_draws: 1,
            distortion: DistortionStatistics::Ensemble,
        }
    }
}

impl TrialsConfig {
    pub fn plan(&self, master_seed: u64) -> TrialPlan {
        TrialPlan {
            n_blocks: self.blocks,
            n_inner: self.pilot_draws,
            master_seed,
            calibration_blocks: self.calibration_blocks,
            distortion: self.distortion,
            regularize_eve: true,
        }
    }
}

/// `steps` points from `start` to `stop`, linearly or geometrically spaced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
    #[serde(default)]
    pub log: bool,
}

impl Sweep {
    pub fn linear(start: f64, stop: f64, steps: usize) -> Self {
        Self { start, stop, steps, log: false }
    }

    pub fn log(start: f64, stop: f64, steps: usize) -> Self {
        Self { start, stop, steps, log: true }
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        if self.steps == 0 {
            return Err(Error::Config("sweep has no points".into()));
        }
        if !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::Config("sweep bounds must be finite".into()));
        }
        if self.log && !(self.start > 0.0 && self.stop > 0.0) {
            return Err(Error::Config("a logarithmic sweep needs positive bounds".into()));
        }
        if self.steps == 1 {
            return Ok(vec![self.start]);
        }
        let last = (self.steps - 1) as f64;
        Ok((0..self.steps)
            .map(|i| {
                let t = i as f64 / last;
                if i == 0 {
                    self.start
                } else if i == self.steps - 1 {
                    self.stop
                } else if self.log {
                    (self.start.ln() + t * (self.stop.ln() - self.start.ln())).exp()
                } else {
                    self.start + t * (self.stop - self.start)
                }
            })
            .collect())
    }

    /// Values rounded to distinct positive integers, for antenna and element counts.
    pub fn counts(&self) -> Result<Vec<usize>> {
        let mut out: Vec<usize> = Vec::new();
        for v in self.values()? {
            let c = v.round();
            if !(c >= 1.0) {
                return Err(Error::Config(format!("count sweep produced {v}")));
            }
            let c = c as usize;
            if out.last() != Some(&c) {
                out.push(c);
            }
        }
        Ok(out)
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    /// Table-I figure scale: `M = 128`, `N = 196`.
    pub fn paper_scale(mut self) -> Self {
        self.system.m = 128;
        self.system.n = 196;
        self
    }

    /// Truncated SHA-256 of the canonical (compact, field-ordered) JSON.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("configuration serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.system;
        if s.k == 0 || s.m <= s.k {
            return Err(Error::invalid("system.m", format!("need M > K >= 1, got M = {}, K = {}", s.m, s.k)));
        }
        if s.n == 0 {
            return Err(Error::invalid("system.n", "the RIS needs at least one element"));
        }
        if s.tau() < s.k {
            return Err(Error::invalid("system.tau", format!("pilot length {} is shorter than K = {}", s.tau(), s.k)));
        }
        if self.target_user >= s.k {
            return Err(Error::invalid("target_user", format!("{} is not one of the {} users", self.target_user, s.k)));
        }
        if !(self.power.xi > 0.0 && self.power.xi <= 1.0) {
            return Err(Error::invalid("power.xi", format!("must lie in (0, 1], got {}", self.power.xi)));
        }
        for (name, v) in [("power.snr_db", self.power.snr_db), ("power.e_u_db", self.power.e_u_db)] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        self.hardware.profile().validate()?;
        self.channel.correlation_spec().validate()?;
        self.channel.phase_noise_model()?;
        let g = &self.geometry;
        for (name, v) in [
            ("geometry.circle_radius", g.circle_radius),
            ("geometry.bs_center_distance", g.bs_center_distance),
            ("geometry.ris_center_distance", g.ris_center_distance),
            ("geometry.bs_ris_distance", g.bs_ris_distance),
            ("geometry.exponent_ris", g.exponent_ris),
            ("geometry.exponent_direct", g.exponent_direct),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !g.receiver_gain_db.is_finite() {
            return Err(Error::invalid("geometry.receiver_gain_db", "must be finite"));
        }
        if self.trials.blocks < 2 {
            return Err(Error::invalid("trials.blocks", "need at least two Monte Carlo blocks"));
        }
        if !(self.xi_grid_step > 0.0 && self.xi_grid_step <= 0.05) {
            return Err(Error::invalid("xi_grid_step", "must lie in (0, 0.05]"));
        }
        if let Some(c) = &self.curves {
            if c.is_empty() {
                return Err(Error::Config("curve list is empty".into()));
            }
        }
        if let Some(s) = &self.sweep {
            s.values()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_default() {
        assert_eq!(ExperimentConfig::from_json("{}").unwrap(), ExperimentConfig::default());
        assert!(ExperimentConfig::from_json(r#"{"sytem": {}}"#).is_err());
    }

    #[test]
    fn round_trip_and_hash() {
        let mut c = ExperimentConfig::default().paper_scale();
        c.sweep = Some(Sweep::log(16.0, 1024.0, 7));
        let back = ExperimentConfig::from_json(&c.to_json_pretty()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        assert_eq!(c.hash().len(), 16);
        let mut d = c.clone();
        d.seed += 1;
        assert_ne!(d.hash(), c.hash());
    }

    #[test]
    fn sweep_values() {
        assert_eq!(Sweep::linear(0.0, 1.0, 3).values().unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(Sweep::log(16.0, 4096.0, 5).counts().unwrap(), vec![16, 64, 256, 1024, 4096]);
        assert!(Sweep::linear(0.0, 1.0, 0).values().is_err());
        assert!(Sweep::log(0.0, 1.0, 3).values().is_err());
    }

    #[test]
    fn validation_rejects_infeasible_dimensions() {
        let mut c = ExperimentConfig::default();
        c.system.k = 64;
        assert!(c.validate().is_err());
        assert!(ExperimentConfig::default().validate().is_ok());
    }
}
