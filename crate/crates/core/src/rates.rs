//! Closed-form achievable rate, eavesdropper capacity bound and secrecy rate.
//!
//! All expressions here are functions of a handful of traces collected in a
//! [`TraceSummary`]. Each quantity is exposed in every algebraic form used for
//! analysis so the forms can be checked against one another.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimation::HardwareProfile;
use crate::precoding::PowerAllocation;
use crate::statistics::TraceSummary;

fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / std::f64::consts::LN_2
}

/// The expectations that make up the user SINR, already in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateTerms {
    /// `p|E{h^H w_k}|²`.
    pub signal: f64,
    /// `pΣ_{i≠k}E{|h^H w_i|²}`.
    pub multiuser: f64,
    /// `p Var{h^H w_k}`, the beamforming-gain uncertainty.
    pub self_uncertainty: f64,
    /// `qE{h^H VV^H h}`.
    pub an_leakage: f64,
    /// BS transmit plus user receive distortion.
    pub hardware: f64,
    pub noise: f64,
}

impl RateTerms {
    pub fn interference(&self) -> f64 {
        self.multiuser + self.self_uncertainty + self.an_leakage + self.hardware + self.noise
    }

    pub fn sinr(&self) -> f64 {
        self.signal / self.interference()
    }

    pub fn rate(&self) -> f64 {
        log2_1p(self.sinr())
    }
}

pub fn user_rate_terms(t: &TraceSummary, alloc: &PowerAllocation, hw: &HardwareProfile) -> RateTerms {
    let p = alloc.p();
    let q = alloc.q();
    let m = t.m as f64;
    let k = t.k_users as f64;
    RateTerms {
        signal: p * t.tau as f64 * t.pilot_power * t.zeta,
        multiuser: p * t.interference,
        self_uncertainty: p * t.tr_c_rpr / t.zeta,
        an_leakage: q * (m - k) / m * t.tr_c,
        hardware: (hw.kappa_t_bs + hw.kappa_r_ue) * alloc.total_power / m * t.tr_r,
        noise: hw.downlink_noise,
    }
}

/// Achievable rate of the user described by `t`, bits/s/Hz.
pub fn user_rate(t: &TraceSummary, alloc: &PowerAllocation, hw: &HardwareProfile) -> f64 {
    user_rate_terms(t, alloc, hw).rate()
}

/// Upper bound on the eavesdropper's ergodic capacity and its internals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EveBound {
    pub signal: f64,
    pub interference: f64,
    /// Interference shape factor; positive exactly when the bound is valid.
    pub chi: f64,
    /// Moment-matched Wishart scale.
    pub wishart_scale: f64,
    /// Moment-matched Wishart degrees of freedom.
    pub wishart_dof: f64,
    pub sinr: f64,
    /// The same SINR evaluated through the Wishart inverse-mean form.
    pub sinr_moment_form: f64,
    pub capacity: f64,
    /// `η_w > M_E + 1`, the margin under which the inverse-mean step is accurate.
    pub wishart_margin: bool,
}

/// Jamming power `q(M−K) + κ_t^BS P_t` seen by the eavesdropper.
fn eve_jamming(alloc: &PowerAllocation, hw: &HardwareProfile) -> f64 {
    alloc.q() * (alloc.m - alloc.k) as f64 + hw.kappa_t_bs * alloc.total_power
}

/// First and second moment factors of the eavesdropper's jamming covariance
/// `qVV^H + Υ_t`: its mean is about `(B/M) I` and its square about `(D/M) I`.
pub fn jamming_moments(alloc: &PowerAllocation, hw: &HardwareProfile) -> (f64, f64) {
    let q = alloc.q();
    let m = alloc.m as f64;
    let k = alloc.k as f64;
    let kp = hw.kappa_t_bs * alloc.total_power;
    let d = q * q * (m - k) + 2.0 * q * kp * (m - k) / m + kp * kp / m;
    (eve_jamming(alloc, hw), d)
}

pub fn eve_capacity_bound(t: &TraceSummary, alloc: &PowerAllocation, hw: &HardwareProfile, m_e: usize) -> Result<EveBound> {
    let b = eve_jamming(alloc, hw);
    if !(b > 0.0) {
        return Err(Error::UnboundedEveCapacity(
            "no artificial noise and an ideal BS transmitter leave the eavesdropper without interference".into(),
        ));
    }
    let p = alloc.p();
    let q = alloc.q();
    let m = alloc.m as f64;
    let k = alloc.k as f64;
    let me = m_e as f64;
    let kp = hw.kappa_t_bs * alloc.total_power;

    let signal = p * me * m * b * t.tr_rpr_q * t.tr_q;
    let spread = kp * kp + q * q * m * (m - k) + 2.0 * q * (m - k) * kp;
    let chi = b * b * t.tr_q * t.tr_q - me * spread * t.tr_q2;
    let interference = chi * t.zeta;

    let (_, d) = jamming_moments(alloc, hw);
    let wishart_scale = t.tr_q2 * d / (t.tr_q * b);
    let wishart_dof = t.tr_q * t.tr_q * b * b / m / (t.tr_q2 * d);
    if !(wishart_dof > me) || !(chi > 0.0) {
        return Err(Error::BoundInvalid(format!(
            "Wishart degrees of freedom {wishart_dof:.4} do not exceed the {m_e} eavesdropper antennas"
        )));
    }
    let sinr = signal / interference;
    let sinr_moment_form = p * me * t.tr_rpr_q / (wishart_scale * (wishart_dof - me) * t.zeta);
    Ok(EveBound {
        signal,
        interference,
        chi,
        wishart_scale,
        wishart_dof,
        sinr,
        sinr_moment_form,
        capacity: log2_1p(sinr),
        wishart_margin: wishart_dof > me + 1.0,
    })
}

/// Eavesdropper bound when all power carries data (`q = 0`).
pub fn eve_capacity_no_an(t: &TraceSummary, hw: &HardwareProfile, m_e: usize) -> Result<f64> {
    if !(hw.kappa_t_bs > 0.0) {
        return Err(Error::UnboundedEveCapacity(
            "without artificial noise the eavesdropper is interference-free unless the BS transmitter is impaired".into(),
        ));
    }
    let me = m_e as f64;
    let m = t.m as f64;
    let k = t.k_users as f64;
    let gap = t.tr_q * t.tr_q - me * t.tr_q2;
    if !(gap > 0.0) {
        return Err(Error::BoundInvalid(format!(
            "[tr Q_E]^2 - M_E tr(Q_E^2) = {gap:.4e} is not positive for M_E = {m_e}"
        )));
    }
    let sinr = me * m * t.tr_rpr_q * t.tr_q / (hw.kappa_t_bs * t.zeta * k * gap);
    Ok(log2_1p(sinr))
}

/// Power-split-free building blocks of the secrecy rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitTerms {
    /// `τρζ_k`, the coherent beamforming gain per unit data power.
    pub signal_gain: f64,
    /// Multiuser plus self-uncertainty interference per unit data power.
    pub interference_gain: f64,
    /// Distortion plus noise at full data power.
    pub fixed_noise: f64,
    /// Noise floor of the rate once normalized by `P_t/K`.
    pub split_noise: f64,
    /// Growth of the normalized interference with `ξ`.
    pub leakage_slope: f64,
    /// `tr(R_kΨ_k⁻¹R_k Q_E) tr(Q_E)/ζ_k`.
    pub eve_leakage: f64,
    pub tr_q: f64,
    pub tr_q2: f64,
    pub tr_c: f64,
    pub zeta: f64,
    pub tr_rpr_q: f64,
    pub kappa_t_bs: f64,
    pub m: usize,
    pub k: usize,
    pub total_power: f64,
}

impl SplitTerms {
    pub fn new(t: &TraceSummary, hw: &HardwareProfile, total_power: f64) -> Self {
        let m = t.m as f64;
        let k = t.k_users as f64;
        let interference_gain = t.interference + t.tr_c_rpr / t.zeta;
        let kappa = hw.kappa_t_bs + hw.kappa_r_ue;
        let split_noise = k / m * (t.tr_c + kappa * t.tr_r) + hw.downlink_noise * k / total_power;
        Self {
            signal_gain: t.tau as f64 * t.pilot_power * t.zeta,
            interference_gain,
            fixed_noise: kappa * total_power * t.tr_r / m + hw.downlink_noise,
            split_noise,
            // The data share of the interference grows with ξ while the AN
            // leakage (K/M)tr(C) shrinks with it.
            leakage_slope: interference_gain - k / m * t.tr_c,
            eve_leakage: t.tr_rpr_q * t.tr_q / t.zeta,
            tr_q: t.tr_q,
            tr_q2: t.tr_q2,
            tr_c: t.tr_c,
            zeta: t.zeta,
            tr_rpr_q: t.tr_rpr_q,
            kappa_t_bs: hw.kappa_t_bs,
            m: t.m,
            k: t.k_users,
            total_power,
        }
    }

    /// Normalized spread of the eavesdropper's interference,
    /// `((1−ξ)²M/(M−K) + 2(1−ξ)κ + κ²)/(1−ξ+κ)`.
    pub fn eve_spread(&self, xi: f64) -> f64 {
        let m = self.m as f64;
        let k = self.k as f64;
        let a = 1.0 - xi;
        let kt = self.kappa_t_bs;
        (a * a * m / (m - k) + 2.0 * a * kt + kt * kt) / (a + kt)
    }

    pub fn user_sinr(&self, xi: f64) -> f64 {
        xi * self.signal_gain / (xi * self.leakage_slope + self.split_noise)
    }

    pub fn eve_sinr(&self, xi: f64, m_e: usize) -> Result<f64> {
        let m = self.m as f64;
        let k = self.k as f64;
        let delta = m_e as f64 / m;
        let upsilon = 1.0 - xi + self.kappa_t_bs;
        if !(upsilon > 0.0) {
            return Err(Error::UnboundedEveCapacity("ξ = 1 with an ideal BS transmitter".into()));
        }
        let den = k * upsilon * self.tr_q * self.tr_q - delta * k * m * self.eve_spread(xi) * self.tr_q2;
        if !(den > 0.0) {
            return Err(Error::BoundInvalid(format!("eavesdropper SINR denominator {den:.4e} is not positive")));
        }
        Ok(xi * delta * m * m * self.eve_leakage / den)
    }

    /// Unclipped secrecy rate as a function of the power split.
    pub fn secrecy_difference(&self, xi: f64, m_e: usize) -> Result<f64> {
        Ok(log2_1p(self.user_sinr(xi)) - log2_1p(self.eve_sinr(xi, m_e)?))
    }

    /// Unclipped secrecy rate without AN, written with the normalized
    /// eavesdropper antenna count `δ = M_E/M`.
    pub fn no_an_difference(&self, m_e: usize) -> Result<f64> {
        let m = self.m as f64;
        let k = self.k as f64;
        let p_t = self.total_power;
        let delta = m_e as f64 / m;
        let user = p_t * self.signal_gain / k / (p_t * self.interference_gain / k + self.fixed_noise);
        let kt = self.kappa_t_bs;
        if !(kt > 0.0) {
            return Err(Error::UnboundedEveCapacity("no AN and an ideal BS transmitter".into()));
        }
        let den = kt * self.zeta * k * self.tr_q * self.tr_q - delta * kt * self.zeta * m * k * self.tr_q2;
        if !(den > 0.0) {
            return Err(Error::BoundInvalid(format!("no-AN eavesdropper denominator {den:.4e} is not positive")));
        }
        let eve = delta * m * m * self.tr_rpr_q * self.tr_q / den;
        Ok(log2_1p(user) - log2_1p(eve))
    }

    /// Largest normalized eavesdropper array `δ_AN` that keeps the no-AN secrecy rate positive.
    pub fn max_eve_ratio_no_an(&self) -> f64 {
        let m = self.m as f64;
        let k = self.k as f64;
        let kt = self.kappa_t_bs;
        let num = self.signal_gain * kt * k / m * self.tr_q;
        let den = kt * self.signal_gain * k * self.tr_q2 / self.tr_q
            + m / self.zeta * (self.interference_gain + k * self.fixed_noise / self.total_power) * self.tr_rpr_q;
        num / den
    }

    /// Largest normalized eavesdropper array `δ_sec` for which some AN split keeps
    /// the secrecy rate positive (the `ξ → 0⁺` threshold).
    pub fn max_eve_ratio_an(&self) -> f64 {
        let m = self.m as f64;
        let k = self.k as f64;
        let kt = self.kappa_t_bs;
        let spread0 = (m / (m - k) + 2.0 * kt + kt * kt) / (1.0 + kt);
        let num = self.signal_gain * k * (1.0 + kt) * self.tr_q * self.tr_q;
        let den = m * m * self.eve_leakage * self.split_noise + self.signal_gain * k * m * spread0 * self.tr_q2;
        num / den
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecrecyReport {
    pub user_rate: f64,
    pub eve_capacity: f64,
    /// `R_k − C̄_E` before clipping.
    pub difference: f64,
    pub secrecy_rate: f64,
    /// The unclipped difference re-derived through the power-split form.
    pub split_difference: f64,
    pub split_secrecy_rate: f64,
    pub terms: RateTerms,
    pub eve: EveBound,
}

pub fn secrecy_rate(t: &TraceSummary, alloc: &PowerAllocation, hw: &HardwareProfile, m_e: usize) -> Result<SecrecyReport> {
    let terms = user_rate_terms(t, alloc, hw);
    let eve = eve_capacity_bound(t, alloc, hw, m_e)?;
    let user_rate = terms.rate();
    let difference = user_rate - eve.capacity;
    let split = SplitTerms::new(t, hw, alloc.total_power);
    let split_difference = split.secrecy_difference(alloc.xi, m_e)?;
    Ok(SecrecyReport {
        user_rate,
        eve_capacity: eve.capacity,
        difference,
        secrecy_rate: difference.max(0.0),
        split_difference,
        split_secrecy_rate: split_difference.max(0.0),
        terms,
        eve,
    })
}

/// Largest eavesdropper array without AN, `(δ_AN, ⌊δ_AN M⌋)`.
pub fn max_eve_antennas_no_an(t: &TraceSummary, hw: &HardwareProfile, total_power: f64) -> (f64, usize) {
    let delta = SplitTerms::new(t, hw, total_power).max_eve_ratio_no_an();
    (delta, (delta * t.m as f64).floor() as usize)
}

/// `(δ_sec, ⌊δ_sec M⌋)`.
pub fn max_eve_antennas_an(t: &TraceSummary, hw: &HardwareProfile, total_power: f64) -> (f64, usize) {
    let delta = SplitTerms::new(t, hw, total_power).max_eve_ratio_an();
    (delta, (delta * t.m as f64).floor() as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticRates {
    pub user_rate: f64,
    pub eve_capacity: f64,
    pub difference: f64,
    pub secrecy_rate: f64,
}

impl AsymptoticRates {
    fn from_sinrs(user: f64, eve: f64) -> Self {
        let user_rate = log2_1p(user);
        let eve_capacity = log2_1p(eve);
        let difference = user_rate - eve_capacity;
        Self {
            user_rate,
            eve_capacity,
            difference,
            secrecy_rate: difference.max(0.0),
        }
    }
}

/// Inputs for the uncorrelated-fading specialization: `R_I = I`, `R_B = I`,
/// ideal uplink hardware. Every covariance is then a polynomial in `H₁H₁^H`,
/// so only its eigenvalues matter.
#[derive(Debug, Clone)]
pub struct UncorrelatedSystem {
    /// Eigenvalues of `H₁H₁^H`.
    pub los_eigenvalues: Vec<f64>,
    pub k: usize,
    pub tau: usize,
    pub pilot_power: f64,
    pub beta_direct_user: Vec<f64>,
    pub beta_ris_user: Vec<f64>,
    pub beta_direct_eve: f64,
    pub beta_ris_eve: f64,
}

/// Secrecy rate of user `k` under uncorrelated fading, evaluated with scalar
/// sums over the eigenvalues of `H₁H₁^H`.
pub fn secrecy_uncorrelated(
    sys: &UncorrelatedSystem,
    user: usize,
    alloc: &PowerAllocation,
    hw: &HardwareProfile,
    m_e: usize,
) -> Result<AsymptoticRates> {
    if !hw.uplink_is_ideal() {
        return Err(Error::invalid("hardware", "the uncorrelated specialization assumes ideal uplink hardware"));
    }
    let m = sys.los_eigenvalues.len() as f64;
    let k = sys.k as f64;
    let p = alloc.p();
    let q = alloc.q();
    let p_t = alloc.total_power;
    let tr = sys.tau as f64 * sys.pilot_power;
    let cov = |i: usize, mu: f64| sys.beta_direct_user[i] + sys.beta_ris_user[i] * mu;
    // diagonal of R Ψ⁻¹ R in the shared eigenbasis
    let gram = |i: usize, mu: f64| {
        let r = cov(i, mu);
        r * r / (tr * r + hw.uplink_noise)
    };
    let eig = &sys.los_eigenvalues;
    let sum = |f: &dyn Fn(f64) -> f64| eig.iter().map(|&mu| f(mu)).sum::<f64>();

    let tr_gram_k = sum(&|mu| gram(user, mu));
    let mut cross = 0.0;
    for i in 0..sys.k {
        if i != user {
            cross += sum(&|mu| cov(user, mu) * gram(i, mu)) / sum(&|mu| gram(i, mu));
        }
    }
    let tr_err = sum(&|mu| cov(user, mu) - tr * gram(user, mu));
    let self_term = sum(&|mu| (cov(user, mu) - tr * gram(user, mu)) * gram(user, mu)) / tr_gram_k;
    let tr_r = sum(&|mu| cov(user, mu));
    let user_sinr = p * tr * tr_gram_k
        / (p * (cross + self_term)
            + q * (m - k) / m * tr_err
            + (hw.kappa_t_bs + hw.kappa_r_ue) * p_t / m * tr_r
            + hw.downlink_noise);

    let b = q * (m - k) + hw.kappa_t_bs * p_t;
    if !(b > 0.0) {
        return Err(Error::UnboundedEveCapacity("no AN and an ideal BS transmitter".into()));
    }
    let me = m_e as f64;
    let eve = |mu: f64| sys.beta_direct_eve + sys.beta_ris_eve * mu;
    let tr_q = sum(&eve);
    let tr_q2 = sum(&|mu| eve(mu) * eve(mu));
    let tr_qg = sum(&|mu| eve(mu) * gram(user, mu));
    let kp = hw.kappa_t_bs * p_t;
    let varpi = me * kp * kp + q * q * me * m * (m - k) + 2.0 * q * me * (m - k) * kp;
    let den = b * b * tr_q * tr_q - varpi * tr_q2;
    if !(den > 0.0) {
        return Err(Error::BoundInvalid(format!("eavesdropper denominator {den:.4e} is not positive")));
    }
    let eve_sinr = p * me * m * b * tr_q * tr_qg / tr_gram_k / den;
    Ok(AsymptoticRates::from_sinrs(user_sinr, eve_sinr))
}

/// Symmetric large-surface system: `H₁H₁^H ≈ β₁N I`, identity correlations,
/// ideal uplink hardware.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LargeSurface {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub tau: usize,
    pub pilot_power: f64,
    pub beta_1: f64,
    pub beta_direct: f64,
    pub beta_ris: f64,
    pub beta_direct_eve: f64,
    pub beta_ris_eve: f64,
}

impl LargeSurface {
    /// Aggregate user gain `β₂ + β_Iβ₁N`.
    pub fn user_gain(&self) -> f64 {
        self.beta_direct + self.beta_ris * self.beta_1 * self.n as f64
    }

    /// Aggregate eavesdropper gain `β₃ + β_{I,E}β₁N`.
    pub fn eve_gain(&self) -> f64 {
        self.beta_direct_eve + self.beta_ris_eve * self.beta_1 * self.n as f64
    }

    /// Estimated-channel power per antenna, `G²/(G + σ_u²/(τρ))`.
    pub fn estimate_gain(&self, uplink_noise: f64) -> f64 {
        let g = self.user_gain();
        g * g / (g + uplink_noise / (self.tau as f64 * self.pilot_power))
    }
}

/// Secrecy rate for `N ≫ M` under uncorrelated fading.
pub fn secrecy_large_n(sys: &LargeSurface, alloc: &PowerAllocation, hw: &HardwareProfile, m_e: usize) -> Result<AsymptoticRates> {
    let m = sys.m as f64;
    let k = sys.k as f64;
    let xi = alloc.xi;
    let p_t = alloc.total_power;
    let g = sys.user_gain();
    let est = sys.estimate_gain(hw.uplink_noise);
    let interference = k * g - est;
    let user_sinr = xi * p_t * m * est / k
        / (xi * p_t * interference / k
            + (1.0 - xi) * p_t * (g - est)
            + (hw.kappa_t_bs + hw.kappa_r_ue) * p_t * g
            + hw.downlink_noise);

    let b = alloc.q() * (m - k) + hw.kappa_t_bs * p_t;
    if !(b > 0.0) {
        return Err(Error::UnboundedEveCapacity("no AN and an ideal BS transmitter".into()));
    }
    let me = m_e as f64;
    let q = alloc.q();
    let kp = hw.kappa_t_bs * p_t;
    let varpi = me * kp * kp + q * q * me * m * (m - k) + 2.0 * q * me * (m - k) * kp;
    let ge2 = sys.eve_gain().powi(2);
    let den = m * b * b * ge2 - varpi * ge2;
    if !(den > 0.0) {
        return Err(Error::BoundInvalid(format!("eavesdropper denominator {den:.4e} is not positive")));
    }
    let eve_sinr = alloc.p() * me * m * b * ge2 / den;
    Ok(AsymptoticRates::from_sinrs(user_sinr, eve_sinr))
}

/// Limit of the large-surface secrecy rate when `P_t = E_u/N` and `N → ∞`.
#[allow(clippy::too_many_arguments)]
pub fn secrecy_power_scaled(
    e_u: f64,
    beta_ris: f64,
    beta_1: f64,
    m: usize,
    k: usize,
    m_e: usize,
    xi: f64,
    hw: &HardwareProfile,
) -> Result<AsymptoticRates> {
    let (mf, kf, me) = (m as f64, k as f64, m_e as f64);
    let gain = e_u * beta_ris * beta_1;
    let user_sinr = xi * gain * mf / kf / (xi * gain * (kf - 1.0) / kf + (hw.kappa_t_bs + hw.kappa_r_ue) * gain + hw.downlink_noise);
    let eve_sinr = limiting_eve_sinr(m, k, m_e, xi, hw.kappa_t_bs, me)?;
    Ok(AsymptoticRates::from_sinrs(user_sinr, eve_sinr))
}

fn limiting_eve_sinr(m: usize, k: usize, m_e: usize, xi: f64, kt: f64, me: f64) -> Result<f64> {
    let (mf, kf) = (m as f64, k as f64);
    let upsilon = 1.0 - xi + kt;
    if !(upsilon > 0.0) {
        return Err(Error::UnboundedEveCapacity("ξ = 1 with an ideal BS transmitter".into()));
    }
    let a = 1.0 - xi;
    let den = mf * upsilon * upsilon - me * (kt * kt + mf * a * a / (mf - kf) + 2.0 * a * kt);
    if !(den > 0.0) {
        return Err(Error::BoundInvalid(format!("eavesdropper denominator {den:.4e} is not positive for M_E = {m_e}")));
    }
    Ok(xi * me * mf * upsilon / kf / den)
}

/// Limit for `M ≫ K`, `M ≫ M_E` and `N → ∞`.
pub fn secrecy_limit(m: usize, k: usize, m_e: usize, xi: f64, hw: &HardwareProfile) -> Result<AsymptoticRates> {
    let (mf, kf, me) = (m as f64, k as f64, m_e as f64);
    let kt = hw.kappa_t_bs;
    if !(1.0 - xi + kt > 0.0) {
        return Err(Error::UnboundedEveCapacity("ξ = 1 with an ideal BS transmitter".into()));
    }
    let user_sinr = xi * mf / kf / (xi * (kf - 1.0) / kf + kt + hw.kappa_r_ue);
    let eve_sinr = xi * me / (kf * (1.0 - xi + kt));
    Ok(AsymptoticRates::from_sinrs(user_sinr, eve_sinr))
}
