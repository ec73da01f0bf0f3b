//! Deterministic second-order statistics shared by the closed forms and the
//! Monte Carlo oracle.

use crate::error::Result;
use crate::estimation::{build_psi, estimate_gram, estimator_matrix, factor_psi, HardwareProfile, PilotConfig};
use crate::geometry::{ChannelModel, SystemDimensions};
use crate::linalg::{cplx, hermitize, trace_of_product, trace_re, CMat};

#[derive(Debug, Clone)]
pub struct UserStatistics {
    /// Aggregate channel covariance `R_k`.
    pub r: CMat,
    /// Despread pilot covariance `Ψ_k` (divided by `τ`).
    pub psi: CMat,
    /// `√ρ R_kΨ_k⁻¹`.
    pub estimator: CMat,
    /// `R_kΨ_k⁻¹R_k`.
    pub rpr: CMat,
    /// Estimation error covariance `C_k`.
    pub c: CMat,
    /// `tr(R_kΨ_k⁻¹R_k)`.
    pub zeta: f64,
    pub psi_condition: f64,
}

#[derive(Debug, Clone)]
pub struct ChannelStatistics {
    pub dims: SystemDimensions,
    pub hw: HardwareProfile,
    pub pilots: PilotConfig,
    pub users: Vec<UserStatistics>,
    /// Covariance `Q_E` of each eavesdropper antenna's aggregate channel.
    pub q_e: CMat,
    pub warnings: Vec<String>,
}

impl ChannelStatistics {
    pub fn new(model: &ChannelModel, hw: &HardwareProfile, pilots: &PilotConfig) -> Result<Self> {
        hw.validate()?;
        let dims = model.dims;
        let covariances: Vec<CMat> = (0..dims.k).map(|k| model.user_covariance(k)).collect();
        Self::from_covariances(dims, covariances, model.eve_covariance(), hw, pilots)
    }

    /// Statistics from explicit covariances; used when `R_k` and `Q_E` come from
    /// somewhere other than a [`ChannelModel`].
    pub fn from_covariances(
        dims: SystemDimensions,
        covariances: Vec<CMat>,
        q_e: CMat,
        hw: &HardwareProfile,
        pilots: &PilotConfig,
    ) -> Result<Self> {
        let rho = pilots.power;
        let tau = pilots.tau as f64;
        let mut users = Vec::with_capacity(covariances.len());
        let mut warnings = Vec::new();
        for (k, r) in covariances.iter().enumerate() {
            let psi = build_psi(&covariances, k, pilots, hw);
            let solver = factor_psi(&psi)?;
            if !solver.is_well_conditioned() {
                warnings.push(format!(
                    "user {k}: pilot covariance condition number {:.3e} exceeds 1e12",
                    solver.condition_number()
                ));
            }
            let rpr = estimate_gram(r, &solver);
            let c = hermitize(&(r - &rpr * cplx(tau * rho)));
            users.push(UserStatistics {
                estimator: estimator_matrix(r, &solver, rho),
                zeta: trace_re(&rpr),
                psi_condition: solver.condition_number(),
                r: r.clone(),
                psi,
                rpr,
                c,
            });
        }
        Ok(Self {
            dims,
            hw: *hw,
            pilots: pilots.clone(),
            users,
            q_e,
            warnings,
        })
    }

    pub fn nmse(&self, k: usize) -> f64 {
        trace_re(&self.users[k].c) / trace_re(&self.users[k].r)
    }

    /// `Var{h_k^H w_k}` for jointly Gaussian channel and estimate,
    /// `[τρ tr((R_kΨ_k⁻¹R_k)²) + tr(C_k R_kΨ_k⁻¹R_k)]/ζ_k`. Unlike the rate
    /// expression it keeps the fourth moment of the estimate.
    pub fn gain_variance_gaussian(&self, k: usize) -> f64 {
        let u = &self.users[k];
        let tr = self.pilots.tau as f64 * self.pilots.power;
        (tr * trace_of_product(&u.rpr, &u.rpr) + trace_of_product(&u.c, &u.rpr)) / u.zeta
    }

    /// Scalar traces the closed-form rate expressions are built from.
    pub fn traces(&self, k: usize) -> TraceSummary {
        let u = &self.users[k];
        let cross = self
            .users
            .iter()
            .enumerate()
            .map(|(i, ui)| if i == k { 0.0 } else { trace_of_product(&u.r, &ui.rpr) / ui.zeta })
            .sum();
        TraceSummary {
            m: self.dims.m,
            k_users: self.dims.k,
            tau: self.pilots.tau,
            pilot_power: self.pilots.power,
            zeta: u.zeta,
            tr_r: trace_re(&u.r),
            tr_c: trace_re(&u.c),
            tr_c_rpr: trace_of_product(&u.c, &u.rpr),
            interference: cross,
            tr_rpr_q: trace_of_product(&u.rpr, &self.q_e),
            tr_q: trace_re(&self.q_e),
            tr_q2: trace_of_product(&self.q_e, &self.q_e),
        }
    }
}

/// Every trace the user-rate and eavesdropper-bound expressions need for one
/// user. Both the general matrix route and the uncorrelated eigenvalue route
/// produce one of these.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSummary {
    pub m: usize,
    pub k_users: usize,
    pub tau: usize,
    pub pilot_power: f64,
    /// `ζ_k = tr(R_kΨ_k⁻¹R_k)`.
    pub zeta: f64,
    pub tr_r: f64,
    pub tr_c: f64,
    /// `tr(C_k R_kΨ_k⁻¹R_k)`.
    pub tr_c_rpr: f64,
    /// `Σ_{i≠k} tr(R_k R_iΨ_i⁻¹R_i)/ζ_i`.
    pub interference: f64,
    /// `tr(R_kΨ_k⁻¹R_k Q_E)`.
    pub tr_rpr_q: f64,
    pub tr_q: f64,
    pub tr_q2: f64,
}
