//! Hardware-impaired uplink training and the LMMSE estimator of the
//! aggregate channels.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ChannelRealization;
use crate::linalg::{cplx, diag_part, hermitize, identity, trace_re, CMat, CVec, HermitianSolver};
use crate::rng::{complex_normal, complex_normal_mat};

/// Transceiver distortion factors and receiver noise powers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardwareProfile {
    /// Uplink transmit distortion at the users.
    pub kappa_t_ue: f64,
    /// Uplink receive distortion at the BS.
    pub kappa_r_bs: f64,
    /// Downlink transmit distortion at the BS.
    pub kappa_t_bs: f64,
    /// Downlink receive distortion at the users.
    pub kappa_r_ue: f64,
    /// Uplink noise power `σ_u²`.
    pub uplink_noise: f64,
    /// Downlink noise power `σ_k²`.
    pub downlink_noise: f64,
}

impl HardwareProfile {
    pub fn ideal() -> Self {
        Self::uniform(0.0)
    }

    /// All four distortion factors equal to `kappa`, unit noise powers.
    pub fn uniform(kappa: f64) -> Self {
        Self {
            kappa_t_ue: kappa,
            kappa_r_bs: kappa,
            kappa_t_bs: kappa,
            kappa_r_ue: kappa,
            uplink_noise: 1.0,
            downlink_noise: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("kappa_t_ue", self.kappa_t_ue),
            ("kappa_r_bs", self.kappa_r_bs),
            ("kappa_t_bs", self.kappa_t_bs),
            ("kappa_r_ue", self.kappa_r_ue),
            ("uplink_noise", self.uplink_noise),
            ("downlink_noise", self.downlink_noise),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, format!("must be finite and non-negative, got {v}")));
            }
        }
        Ok(())
    }

    pub fn uplink_is_ideal(&self) -> bool {
        self.kappa_t_ue == 0.0 && self.kappa_r_bs == 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PilotConfig {
    pub tau: usize,
    /// Pilot transmit power `ρ`.
    pub power: f64,
    /// `τ × K` pilot matrix with orthogonal unit-modulus columns.
    pub sequences: CMat,
}

impl PilotConfig {
    /// First `k` columns of the `τ`-point DFT basis.
    pub fn dft(tau: usize, k: usize, power: f64) -> Result<Self> {
        if k == 0 || tau < k {
            return Err(Error::invalid("tau", format!("pilot length {tau} cannot carry {k} orthogonal sequences")));
        }
        if !(power > 0.0) || !power.is_finite() {
            return Err(Error::invalid("pilot_power", format!("must be positive, got {power}")));
        }
        let sequences = CMat::from_fn(tau, k, |t, c| Complex64::from_polar(1.0, -2.0 * PI * (t * c) as f64 / tau as f64));
        Ok(Self { tau, power, sequences })
    }

    pub fn users(&self) -> usize {
        self.sequences.ncols()
    }

    pub fn sequence(&self, k: usize) -> CVec {
        self.sequences.column(k).into_owned()
    }

    pub fn with_power(&self, power: f64) -> Result<Self> {
        Self::dft(self.tau, self.users(), power)
    }
}

/// Received pilot block and the per-user despread observations `Y_p φ_k`.
#[derive(Debug, Clone)]
pub struct PilotObservation {
    pub received: CMat,
    pub despread: Vec<CVec>,
}

/// Draw one hardware-impaired pilot block for the channels in `real`.
///
/// User `i` sends `√ρ φ_i^H + η_{t,i}^H` with `η_{t,i} ~ CN(0, ρκ_t^UE I)`; the
/// BS adds receive distortion whose columns are `CN(0, ρκ_r^BS D_r)` with
/// `D_r = Σ_i diag(|h_i|²)` from the instantaneous channels, then AWGN.
pub fn simulate_pilot_phase<R: Rng + ?Sized>(
    real: &ChannelRealization,
    pilots: &PilotConfig,
    hw: &HardwareProfile,
    rng: &mut R,
) -> PilotObservation {
    let tau = pilots.tau;
    let k_users = pilots.users();
    let m = real.h[0].len();
    let rho = pilots.power;
    let sqrt_rho = rho.sqrt();
    let t_scale = (rho * hw.kappa_t_ue).sqrt();

    let mut received = CMat::zeros(m, tau);
    for i in 0..k_users {
        let mut row = pilots.sequence(i).adjoint() * cplx(sqrt_rho);
        for t in 0..tau {
            let eta = complex_normal(rng) * t_scale;
            row[(0, t)] += eta.conj();
        }
        received += &real.h[i] * row;
    }

    let mut d_r = vec![0.0; m];
    for h in &real.h {
        for (a, z) in h.iter().enumerate() {
            d_r[a] += z.norm_sqr();
        }
    }
    let distortion = complex_normal_mat(rng, m, tau);
    let noise = complex_normal_mat(rng, m, tau);
    let noise_scale = hw.uplink_noise.sqrt();
    for t in 0..tau {
        for a in 0..m {
            let r_scale = (rho * hw.kappa_r_bs * d_r[a]).sqrt();
            received[(a, t)] += distortion[(a, t)] * r_scale + noise[(a, t)] * noise_scale;
        }
    }

    let despread = (0..k_users).map(|k| &received * pilots.sequence(k)).collect();
    PilotObservation { received, despread }
}

/// `Ψ_k = τρR_k + ρκ_t^UE ΣR_i + ρκ_r^BS Σ I∘R_i + σ_u² I`.
pub fn build_psi(covariances: &[CMat], k: usize, pilots: &PilotConfig, hw: &HardwareProfile) -> CMat {
    let m = covariances[k].nrows();
    let rho = pilots.power;
    let sum: CMat = covariances.iter().fold(CMat::zeros(m, m), |acc, r| acc + r);
    let mut psi = &covariances[k] * cplx(pilots.tau as f64 * rho);
    psi += &sum * cplx(rho * hw.kappa_t_ue);
    psi += diag_part(&sum) * cplx(rho * hw.kappa_r_bs);
    psi += identity(m) * cplx(hw.uplink_noise);
    hermitize(&psi)
}

/// Factor `Ψ_k`, reporting an ill-conditioned error when it is singular.
pub fn factor_psi(psi: &CMat) -> Result<HermitianSolver> {
    HermitianSolver::new(psi)
}

#[derive(Debug, Clone)]
pub struct Estimate {
    pub h_hat: CVec,
    /// Condition number of `Ψ_k`.
    pub condition: f64,
    /// Set when the condition number exceeds the monitoring threshold.
    pub warning: Option<String>,
}

/// `ĥ_k = √ρ R_k Ψ_k⁻¹ y_{p,k}` via a Hermitian solve.
pub fn lmmse_estimate(y: &CVec, r_k: &CMat, psi: &CMat, rho: f64) -> Result<Estimate> {
    let solver = factor_psi(psi)?;
    let h_hat = r_k * solver.solve_vec(y) * cplx(rho.sqrt());
    let condition = solver.condition_number();
    let warning = (!solver.is_well_conditioned()).then(|| format!("pilot covariance condition number {condition:.3e} exceeds 1e12"));
    Ok(Estimate {
        h_hat,
        condition,
        warning,
    })
}

/// `√ρ R_k Ψ_k⁻¹`, the matrix applied to the despread pilots.
pub fn estimator_matrix(r_k: &CMat, solver: &HermitianSolver, rho: f64) -> CMat {
    // R Ψ⁻¹ = (Ψ⁻¹ R)^H because both are Hermitian.
    solver.solve(r_k).adjoint() * cplx(rho.sqrt())
}

/// `R_k Ψ_k⁻¹ R_k`.
pub fn estimate_gram(r_k: &CMat, solver: &HermitianSolver) -> CMat {
    hermitize(&(r_k * solver.solve(r_k)))
}

/// `C_k = R_k − τρ R_kΨ_k⁻¹R_k`.
pub fn error_covariance(r_k: &CMat, psi: &CMat, rho: f64, tau: usize) -> Result<CMat> {
    let solver = factor_psi(psi)?;
    Ok(hermitize(&(r_k - estimate_gram(r_k, &solver) * cplx(tau as f64 * rho))))
}

/// `tr(C_k)/tr(R_k)`.
pub fn nmse(r_k: &CMat, c_k: &CMat) -> f64 {
    trace_re(c_k) / trace_re(r_k)
}

/// NMSE as `ρ → ∞`: `tr(R_k − τR_kΨ̃_k⁻¹R_k)/tr(R_k)` with the pilot-power-free
/// `Ψ̃_k = τR_k + κ_t^UE ΣR_i + κ_r^BS Σ I∘R_i`. Zero for ideal uplink hardware.
pub fn nmse_high_power_limit(covariances: &[CMat], k: usize, tau: usize, hw: &HardwareProfile) -> Result<f64> {
    if hw.uplink_is_ideal() {
        return Ok(0.0);
    }
    let unit = PilotConfig {
        tau,
        power: 1.0,
        sequences: CMat::zeros(tau, covariances.len()),
    };
    let no_noise = HardwareProfile {
        uplink_noise: 0.0,
        ..*hw
    };
    let psi = build_psi(covariances, k, &unit, &no_noise);
    let c = error_covariance(&covariances[k], &psi, 1.0, tau)?;
    Ok(nmse(&covariances[k], &c))
}

/// NMSE for `N ≫ M` with identity correlations and ideal uplink hardware:
/// `1 − G/(G + σ_u²/(τρ))`, `G = β₂ + β_Iβ₁N`.
pub fn nmse_large_n_limit(beta_direct: f64, beta_ris: f64, beta_1: f64, n: usize, rho: f64, tau: usize, uplink_noise: f64) -> f64 {
    let g = beta_direct + beta_ris * beta_1 * n as f64;
    1.0 - g / (g + uplink_noise / (tau as f64 * rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_asymmetry;
    use crate::rng::{domain, StreamFactory};

    #[test]
    fn dft_pilots_are_orthogonal_unit_modulus() {
        let p = PilotConfig::dft(6, 4, 2.0).unwrap();
        for z in p.sequences.iter() {
            assert!((z.norm() - 1.0).abs() < 1e-14);
        }
        let g = p.sequences.adjoint() * &p.sequences;
        assert!((g - identity(4) * cplx(6.0)).camax() < 1e-10);
        assert!(PilotConfig::dft(3, 4, 1.0).is_err());
        assert!(PilotConfig::dft(4, 4, 0.0).is_err());
    }

    fn two_user_covariances() -> Vec<CMat> {
        let a = CMat::from_fn(3, 3, |i, j| cplx(0.5f64.powi(i.abs_diff(j) as i32)));
        let b = CMat::from_fn(3, 3, |i, j| {
            if i == j {
                cplx(1.0 + i as f64)
            } else {
                Complex64::new(0.1, 0.05 * (i as f64 - j as f64))
            }
        });
        vec![a, b]
    }

    #[test]
    fn ideal_psi_reduction() {
        let rs = two_user_covariances();
        let p = PilotConfig::dft(2, 2, 3.0).unwrap();
        let hw = HardwareProfile::ideal();
        let psi = build_psi(&rs, 1, &p, &hw);
        let want = &rs[1] * cplx(6.0) + identity(3);
        assert!((psi - want).camax() < 1e-14);
    }

    #[test]
    fn diagonal_covariances_make_hadamard_term_plain_sum() {
        let rs: Vec<CMat> = (0..2).map(|i| CMat::from_diagonal(&CVec::from_fn(3, |a, _| cplx(1.0 + (a + i) as f64)))).collect();
        let p = PilotConfig::dft(2, 2, 1.5).unwrap();
        let hw = HardwareProfile {
            kappa_t_ue: 0.0,
            kappa_r_bs: 0.02,
            ..HardwareProfile::ideal()
        };
        let psi = build_psi(&rs, 0, &p, &hw);
        let want = &rs[0] * cplx(3.0) + (&rs[0] + &rs[1]) * cplx(1.5 * 0.02) + identity(3);
        assert!((psi - want).camax() < 1e-14);
    }

    #[test]
    fn scalar_lmmse_reduction() {
        let r = CMat::from_element(1, 1, cplx(2.0));
        let p = PilotConfig::dft(1, 1, 4.0).unwrap();
        let psi = build_psi(std::slice::from_ref(&r), 0, &p, &HardwareProfile::ideal());
        let y = CVec::from_element(1, Complex64::new(0.3, -1.1));
        let est = lmmse_estimate(&y, &r, &psi, 4.0).unwrap();
        let want = y[0] * (4.0f64.sqrt() * 2.0 / (1.0 * 4.0 * 2.0 + 1.0));
        assert!((est.h_hat[0] - want).norm() < 1e-14);
        assert!(est.warning.is_none());
    }

    #[test]
    fn error_covariance_properties() {
        let rs = two_user_covariances();
        let p = PilotConfig::dft(2, 2, 5.0).unwrap();
        let hw = HardwareProfile::uniform(0.01);
        let psi = build_psi(&rs, 0, &p, &hw);
        let c = error_covariance(&rs[0], &psi, 5.0, 2).unwrap();
        assert!(max_asymmetry(&c) < 1e-12);
        let e = nmse(&rs[0], &c);
        assert!(e > 0.0 && e < 1.0);
    }

    #[test]
    fn nmse_monotone_in_pilot_power_and_limits() {
        let rs = two_user_covariances();
        let hw = HardwareProfile::ideal();
        let mut prev = 1.0;
        for e in -3..7 {
            let rho = 10f64.powi(e);
            let p = PilotConfig::dft(2, 2, rho).unwrap();
            let c = error_covariance(&rs[0], &build_psi(&rs, 0, &p, &hw), rho, 2).unwrap();
            let v = nmse(&rs[0], &c);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
        assert!(prev < 1e-5);
        let noisy = HardwareProfile {
            uplink_noise: 1e12,
            ..hw
        };
        let p = PilotConfig::dft(2, 2, 1.0).unwrap();
        let c = error_covariance(&rs[0], &build_psi(&rs, 0, &p, &noisy), 1.0, 2).unwrap();
        assert!((nmse(&rs[0], &c) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn high_power_limit() {
        let rs = two_user_covariances();
        assert_eq!(nmse_high_power_limit(&rs, 0, 2, &HardwareProfile::ideal()).unwrap(), 0.0);
        let hw = HardwareProfile::uniform(0.01);
        let floor = nmse_high_power_limit(&rs, 0, 2, &hw).unwrap();
        let p = PilotConfig::dft(2, 2, 1e6).unwrap();
        let c = error_covariance(&rs[0], &build_psi(&rs, 0, &p, &hw), 1e6, 2).unwrap();
        assert!((nmse(&rs[0], &c) - floor).abs() < 0.01 * floor);
        let mut prev = 0.0;
        for kappa in [0.05f64.powi(2), 0.1f64.powi(2), 0.15f64.powi(2)] {
            let f = nmse_high_power_limit(&rs, 0, 2, &HardwareProfile::uniform(kappa)).unwrap();
            assert!(f > prev);
            prev = f;
        }
    }

    #[test]
    fn large_n_limit_examples() {
        assert!(nmse_large_n_limit(1.0, 1.0, 1.0, 1 << 40, 1.0, 1, 1.0) < 1e-11);
        // G = σ²/(τρ) gives one half
        assert!((nmse_large_n_limit(0.5, 0.25, 1.0, 2, 2.0, 1, 2.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn noiseless_ideal_pilots_recover_scaled_channel() {
        use crate::geometry::*;
        let dims = SystemDimensions::new(4, 2, 2, 2, 1, 2).unwrap();
        let fading = LargeScaleFading::symmetric(2, 1.0, 1.0, 1.0, 1.0, 1.0);
        let mut rng = StreamFactory::new(1).stream(domain::TEST, 0);
        let model = ChannelModel::build(dims, &CorrelationSpec::default(), fading, PhaseNoiseModel::none(), uniform_phase_shifts(4, 0.0), &mut rng).unwrap();
        let real = model.sample(&mut rng);
        let p = PilotConfig::dft(2, 2, 3.0).unwrap();
        let hw = HardwareProfile {
            uplink_noise: 0.0,
            ..HardwareProfile::ideal()
        };
        let obs = simulate_pilot_phase(&real, &p, &hw, &mut rng);
        for k in 0..2 {
            let want = &real.h[k] * cplx(2.0 * 3f64.sqrt());
            assert!((&obs.despread[k] - want).norm() < 1e-12);
        }
    }
}
