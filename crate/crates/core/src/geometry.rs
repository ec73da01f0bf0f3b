//! Deterministic channel statistics and random channel draws.
//!
//! The BS–RIS link is a deterministic line-of-sight matrix `H₁`; the RIS–user,
//! BS–user and eavesdropper links are correlated Rayleigh. The aggregate
//! covariance of a user channel `h = H₁ΦΘh_I + h_B` is
//! `β₂R_B + β_I·H₁Φ(ϱ²R_I + (1−ϱ²)I)Φ^H H₁^H`, where `ϱ = E{e^{jθ̃}}` is the
//! phase-noise characteristic value.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cplx, hermitize, psd_sqrt_real, to_complex, CMat, CVec};
use crate::rng::{complex_normal_mat, complex_normal_vec, von_mises};
use crate::special::{bessel_i1_over_i0, sin_over, sinc};

/// Reference path loss at the reference distance, −20 dB.
pub const REFERENCE_LOSS: f64 = 0.01;
/// Reference distance in meters.
pub const REFERENCE_DISTANCE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemDimensions {
    /// BS antennas.
    pub m: usize,
    /// RIS elements, `n_h · n_v`.
    pub n: usize,
    pub n_h: usize,
    pub n_v: usize,
    /// Legitimate users.
    pub k: usize,
    /// Eavesdropper antennas.
    pub m_e: usize,
    /// Pilot length in symbols.
    pub tau: usize,
}

impl SystemDimensions {
    pub fn new(m: usize, n_h: usize, n_v: usize, k: usize, m_e: usize, tau: usize) -> Result<Self> {
        let dims = Self {
            m,
            n: n_h * n_v,
            n_h,
            n_v,
            k,
            m_e,
            tau,
        };
        dims.validate()?;
        Ok(dims)
    }

    /// Square-ish RIS layout for `n` elements: `n_h` is the largest divisor not above `√n`.
    pub fn with_ris_elements(m: usize, n: usize, k: usize, m_e: usize, tau: usize) -> Result<Self> {
        let (n_h, n_v) = ris_layout(n)?;
        Self::new(m, n_h, n_v, k, m_e, tau)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("k", "at least one user is required"));
        }
        if self.m <= self.k {
            return Err(Error::invalid(
                "m",
                format!("BS antennas ({}) must exceed the user count ({})", self.m, self.k),
            ));
        }
        if self.tau < self.k {
            return Err(Error::invalid(
                "tau",
                format!("pilot length {} is shorter than the user count {}", self.tau, self.k),
            ));
        }
        if self.n == 0 || self.n_h * self.n_v != self.n {
            return Err(Error::invalid(
                "n",
                format!("RIS layout {}x{} does not give {} elements", self.n_h, self.n_v, self.n),
            ));
        }
        Ok(())
    }
}

pub fn ris_layout(n: usize) -> Result<(usize, usize)> {
    if n == 0 {
        return Err(Error::invalid("n", "RIS must have at least one element"));
    }
    let mut n_h = (n as f64).sqrt().floor() as usize;
    while n % n_h != 0 {
        n_h -= 1;
    }
    Ok((n_h, n / n_h))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseNoiseKind {
    VonMises,
    Uniform,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseNoiseModel {
    pub kind: PhaseNoiseKind,
    /// Phase noise power σ_p² in rad².
    pub variance: f64,
}

impl PhaseNoiseModel {
    pub fn new(kind: PhaseNoiseKind, variance: f64) -> Result<Self> {
        if !(variance >= 0.0) || !variance.is_finite() {
            return Err(Error::invalid("phase_noise.variance", format!("must be finite and non-negative, got {variance}")));
        }
        Ok(Self { kind, variance })
    }

    pub fn none() -> Self {
        Self {
            kind: PhaseNoiseKind::None,
            variance: 0.0,
        }
    }

    /// Von Mises concentration `1/σ_p²` (infinite for zero noise).
    pub fn concentration(&self) -> f64 {
        1.0 / self.variance
    }

    /// Uniform half-width `√(3σ_p²)`.
    pub fn half_width(&self) -> f64 {
        (3.0 * self.variance).sqrt()
    }

    fn is_trivial(&self) -> bool {
        self.kind == PhaseNoiseKind::None || self.variance == 0.0
    }

    /// Draw one phase error.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.is_trivial() {
            return 0.0;
        }
        match self.kind {
            PhaseNoiseKind::VonMises => von_mises(rng, self.concentration()),
            PhaseNoiseKind::Uniform => self.half_width() * (2.0 * rng.random::<f64>() - 1.0),
            PhaseNoiseKind::None => 0.0,
        }
    }
}

/// `ϱ = E{e^{jθ̃}}` for the given phase-noise law.
pub fn phase_deviation_factor(model: &PhaseNoiseModel) -> Result<f64> {
    if !(model.variance >= 0.0) {
        return Err(Error::invalid("phase_noise.variance", format!("must be non-negative, got {}", model.variance)));
    }
    if model.is_trivial() {
        return Ok(1.0);
    }
    Ok(match model.kind {
        PhaseNoiseKind::VonMises => bessel_i1_over_i0(model.concentration()),
        PhaseNoiseKind::Uniform => sin_over(model.half_width()),
        PhaseNoiseKind::None => 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RisCorrelationModel {
    /// Isotropic-scattering sinc model over the planar element grid.
    Sinc,
    /// `R_I = I_N`.
    Uncorrelated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSpec {
    /// Exponential correlation index `l` at the BS, `[R_B]_{ij} = l^|i−j|`.
    pub bs_correlation: f64,
    pub spacing_h: f64,
    pub spacing_v: f64,
    pub wavelength: f64,
    /// BS antenna spacing used by the line-of-sight model.
    pub bs_spacing: f64,
    /// RIS element spacing used by the line-of-sight model.
    pub ris_spacing: f64,
    pub ris_model: RisCorrelationModel,
}

impl Default for CorrelationSpec {
    fn default() -> Self {
        let wavelength = 0.1;
        Self {
            bs_correlation: 0.6,
            spacing_h: wavelength / 2.0,
            spacing_v: wavelength / 2.0,
            wavelength,
            bs_spacing: 0.5 * wavelength,
            ris_spacing: 0.25 * wavelength,
            ris_model: RisCorrelationModel::Sinc,
        }
    }
}

impl CorrelationSpec {
    pub fn uncorrelated() -> Self {
        Self {
            bs_correlation: 0.0,
            ris_model: RisCorrelationModel::Uncorrelated,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.bs_correlation) {
            return Err(Error::invalid("bs_correlation", format!("must lie in [0, 1), got {}", self.bs_correlation)));
        }
        for (name, v) in [
            ("spacing_h", self.spacing_h),
            ("spacing_v", self.spacing_v),
            ("wavelength", self.wavelength),
            ("bs_spacing", self.bs_spacing),
            ("ris_spacing", self.ris_spacing),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LargeScaleFading {
    /// BS–RIS path loss.
    pub beta_1: f64,
    /// RIS–user path loss per user.
    pub beta_ris_user: Vec<f64>,
    /// BS–user path loss per user.
    pub beta_direct_user: Vec<f64>,
    /// BS–Eve path loss.
    pub beta_direct_eve: f64,
    /// RIS–Eve path loss.
    pub beta_ris_eve: f64,
}

impl LargeScaleFading {
    /// Every user and Eve share the same losses.
    pub fn symmetric(k: usize, beta_1: f64, beta_ris: f64, beta_direct: f64, beta_ris_eve: f64, beta_direct_eve: f64) -> Self {
        Self {
            beta_1,
            beta_ris_user: vec![beta_ris; k],
            beta_direct_user: vec![beta_direct; k],
            beta_direct_eve,
            beta_ris_eve,
        }
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        if self.beta_ris_user.len() != k || self.beta_direct_user.len() != k {
            return Err(Error::Dimension(format!(
                "path-loss vectors have {} / {} entries for {k} users",
                self.beta_ris_user.len(),
                self.beta_direct_user.len()
            )));
        }
        let all = std::iter::once(self.beta_1)
            .chain(self.beta_ris_user.iter().copied())
            .chain(self.beta_direct_user.iter().copied())
            .chain([self.beta_direct_eve, self.beta_ris_eve]);
        for b in all {
            if !(b >= 0.0) || !b.is_finite() {
                return Err(Error::invalid("path_loss", format!("path losses must be finite and non-negative, got {b}")));
            }
        }
        Ok(())
    }
}

/// `J₀ (d/J₁)^(−exponent)` with the fixed reference constants.
pub fn path_loss(distance: f64, exponent: f64) -> Result<f64> {
    path_loss_with(distance, exponent, REFERENCE_LOSS, REFERENCE_DISTANCE)
}

pub fn path_loss_with(distance: f64, exponent: f64, j0: f64, j1: f64) -> Result<f64> {
    if !(distance > 0.0) || !distance.is_finite() {
        return Err(Error::invalid("distance", format!("must be positive, got {distance}")));
    }
    Ok(j0 * (distance / j1).powf(-exponent))
}

/// Exponential BS correlation `[R_B]_{ij} = l^|i−j|`.
pub fn build_bs_correlation(m: usize, l: f64) -> Result<DMatrix<f64>> {
    if !(0.0..1.0).contains(&l) {
        return Err(Error::invalid("bs_correlation", format!("must lie in [0, 1), got {l}")));
    }
    Ok(DMatrix::from_fn(m, m, |i, j| l.powi(i.abs_diff(j) as i32)))
}

/// Element position `[0, mod(x, N_H)·d_H, ⌊x/N_H⌋·d_V]` (zero-based `x`).
pub fn ris_element_position(x: usize, n_h: usize, spec: &CorrelationSpec) -> [f64; 3] {
    [0.0, (x % n_h) as f64 * spec.spacing_h, (x / n_h) as f64 * spec.spacing_v]
}

/// Sinc correlation `[R_I]_{xy} = sinc(2‖c_x − c_y‖/λ)`; identity for the
/// uncorrelated model.
pub fn build_ris_correlation(dims: &SystemDimensions, spec: &CorrelationSpec) -> DMatrix<f64> {
    let n = dims.n;
    if spec.ris_model == RisCorrelationModel::Uncorrelated {
        return DMatrix::identity(n, n);
    }
    let pos: Vec<[f64; 3]> = (0..n).map(|x| ris_element_position(x, dims.n_h, spec)).collect();
    DMatrix::from_fn(n, n, |x, y| {
        let d: f64 = (0..3).map(|c| (pos[x][c] - pos[y][c]).powi(2)).sum::<f64>().sqrt();
        sinc(2.0 * d / spec.wavelength)
    })
}

/// Deterministic BS–RIS line-of-sight matrix, every entry of modulus `√β₁`.
///
/// BS-side angles are drawn per RIS column and RIS-side angles per BS row, so
/// each entry is `exp(j2π/λ((a)d_BS sinθ₁(b)sinφ₁(b) + (b)d_RIS sinθ₂(a)sinφ₂(a)))`
/// with `θ₂ = π − θ'`, `φ₂ = π + φ'` and `θ' ~ U[0,π]`, `φ' ~ U[0,2π]`.
pub fn build_los_channel<R: Rng + ?Sized>(m: usize, n: usize, spec: &CorrelationSpec, beta_1: f64, rng: &mut R) -> CMat {
    let mut col_term = Vec::with_capacity(n);
    for _ in 0..n {
        let theta: f64 = PI * rng.random::<f64>();
        let phi: f64 = 2.0 * PI * rng.random::<f64>();
        col_term.push(theta.sin() * phi.sin());
    }
    let mut row_term = Vec::with_capacity(m);
    for _ in 0..m {
        let theta: f64 = PI * rng.random::<f64>();
        let phi: f64 = 2.0 * PI * rng.random::<f64>();
        row_term.push((PI - theta).sin() * (PI + phi).sin());
    }
    let k0 = 2.0 * PI / spec.wavelength;
    let amp = beta_1.sqrt();
    CMat::from_fn(m, n, |a, b| {
        let phase = k0 * (a as f64 * spec.bs_spacing * col_term[b] + b as f64 * spec.ris_spacing * row_term[a]);
        Complex64::from_polar(amp, phase)
    })
}

/// RIS phase configuration with every element at the same angle.
pub fn uniform_phase_shifts(n: usize, angle: f64) -> CVec {
    CVec::from_element(n, Complex64::from_polar(1.0, angle))
}

/// `ϱ²R + β(1−ϱ²)I` for a path-loss-scaled RIS correlation `R = βR_I`.
pub fn effective_ris_correlation(r_ris: &DMatrix<f64>, beta: f64, varrho: f64) -> Result<DMatrix<f64>> {
    if !(0.0..=1.0).contains(&varrho) {
        return Err(Error::invalid("varrho", format!("must lie in [0, 1], got {varrho}")));
    }
    let v2 = varrho * varrho;
    let n = r_ris.nrows();
    Ok(r_ris * v2 + DMatrix::identity(n, n) * (beta * (1.0 - v2)))
}

/// `R_B,k + H₁ΦR̃Φ^H H₁^H` by direct matrix products.
pub fn aggregate_covariance(r_direct: &CMat, h1: &CMat, phases: &CVec, r_tilde: &DMatrix<f64>) -> CMat {
    let g = cascade(h1, phases);
    hermitize(&(r_direct + &g * to_complex(r_tilde) * g.adjoint()))
}

fn cascade(h1: &CMat, phases: &CVec) -> CMat {
    let mut g = h1.clone();
    for (b, mut col) in g.column_iter_mut().enumerate() {
        col *= phases[b];
    }
    g
}

#[derive(Debug, Clone)]
enum RisSqrt {
    Identity,
    Dense(CMat),
}

/// Everything about the propagation environment that stays fixed across
/// coherence blocks.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    pub dims: SystemDimensions,
    pub fading: LargeScaleFading,
    pub phase_noise: PhaseNoiseModel,
    varrho: f64,
    r_bs: DMatrix<f64>,
    r_bs_sqrt: CMat,
    r_ris: Option<DMatrix<f64>>,
    ris_sqrt: RisSqrt,
    h1: CMat,
    phases: CVec,
    cascade: CMat,
    gram_los: CMat,
    gram_correlated: CMat,
}

impl ChannelModel {
    /// Assemble a model from explicit parts. `r_ris = None` means `R_I = I_N`,
    /// which avoids storing an `N×N` matrix for large surfaces.
    pub fn from_parts(
        dims: SystemDimensions,
        r_bs: DMatrix<f64>,
        r_ris: Option<DMatrix<f64>>,
        h1: CMat,
        phases: CVec,
        fading: LargeScaleFading,
        phase_noise: PhaseNoiseModel,
    ) -> Result<Self> {
        dims.validate()?;
        fading.validate(dims.k)?;
        if r_bs.shape() != (dims.m, dims.m) || h1.shape() != (dims.m, dims.n) || phases.len() != dims.n {
            return Err(Error::Dimension(format!(
                "R_B {:?}, H1 {:?}, phases {} for M = {}, N = {}",
                r_bs.shape(),
                h1.shape(),
                phases.len(),
                dims.m,
                dims.n
            )));
        }
        if let Some(r) = &r_ris {
            if r.shape() != (dims.n, dims.n) {
                return Err(Error::Dimension(format!("R_I is {:?}, expected {n}x{n}", r.shape(), n = dims.n)));
            }
        }
        let varrho = phase_deviation_factor(&phase_noise)?;
        let r_bs_sqrt = to_complex(&psd_sqrt_real(&r_bs));
        let cascade = cascade(&h1, &phases);
        let gram_los = hermitize(&(&h1 * h1.adjoint()));
        let (ris_sqrt, gram_correlated) = match &r_ris {
            None => (RisSqrt::Identity, gram_los.clone()),
            Some(r) => {
                let s = to_complex(&psd_sqrt_real(r));
                let gram = hermitize(&(&cascade * to_complex(r) * cascade.adjoint()));
                (RisSqrt::Dense(s), gram)
            }
        };
        Ok(Self {
            dims,
            fading,
            phase_noise,
            varrho,
            r_bs,
            r_bs_sqrt,
            r_ris,
            ris_sqrt,
            h1,
            phases,
            cascade,
            gram_los,
            gram_correlated,
        })
    }

    /// Build correlation matrices from `spec` and draw `H₁` from `los_rng`.
    pub fn build<R: Rng + ?Sized>(
        dims: SystemDimensions,
        spec: &CorrelationSpec,
        fading: LargeScaleFading,
        phase_noise: PhaseNoiseModel,
        phases: CVec,
        los_rng: &mut R,
    ) -> Result<Self> {
        dims.validate()?;
        spec.validate()?;
        let r_bs = build_bs_correlation(dims.m, spec.bs_correlation)?;
        let r_ris = match spec.ris_model {
            RisCorrelationModel::Uncorrelated => None,
            RisCorrelationModel::Sinc => Some(build_ris_correlation(&dims, spec)),
        };
        let h1 = build_los_channel(dims.m, dims.n, spec, fading.beta_1, los_rng);
        Self::from_parts(dims, r_bs, r_ris, h1, phases, fading, phase_noise)
    }

    pub fn varrho(&self) -> f64 {
        self.varrho
    }

    pub fn los(&self) -> &CMat {
        &self.h1
    }

    pub fn phases(&self) -> &CVec {
        &self.phases
    }

    pub fn bs_correlation(&self) -> &DMatrix<f64> {
        &self.r_bs
    }

    /// `R_I`, or `None` when it is the identity.
    pub fn ris_correlation(&self) -> Option<&DMatrix<f64>> {
        self.r_ris.as_ref()
    }

    pub fn ris_is_uncorrelated(&self) -> bool {
        self.r_ris.is_none()
    }

    /// `H₁H₁^H`.
    pub fn los_gram(&self) -> &CMat {
        &self.gram_los
    }

    /// Same phase matrix with a different RIS configuration.
    pub fn with_phases(&self, phases: CVec) -> Result<Self> {
        Self::from_parts(
            self.dims,
            self.r_bs.clone(),
            self.r_ris.clone(),
            self.h1.clone(),
            phases,
            self.fading.clone(),
            self.phase_noise,
        )
    }

    pub fn with_phase_noise(&self, phase_noise: PhaseNoiseModel) -> Result<Self> {
        let mut out = self.clone();
        out.varrho = phase_deviation_factor(&phase_noise)?;
        out.phase_noise = phase_noise;
        Ok(out)
    }

    pub fn with_fading(&self, fading: LargeScaleFading) -> Result<Self> {
        fading.validate(self.dims.k)?;
        let mut out = self.clone();
        out.fading = fading;
        Ok(out)
    }

    /// `β₂R_B + β_I(ϱ²H₁ΦR_IΦ^H H₁^H + (1−ϱ²)H₁H₁^H)`.
    fn covariance(&self, beta_direct: f64, beta_ris: f64) -> CMat {
        let v2 = self.varrho * self.varrho;
        let mut out = to_complex(&self.r_bs) * cplx(beta_direct);
        out += &self.gram_correlated * cplx(beta_ris * v2);
        out += &self.gram_los * cplx(beta_ris * (1.0 - v2));
        hermitize(&out)
    }

    /// Aggregate covariance `R_k` of user `k`.
    pub fn user_covariance(&self, k: usize) -> CMat {
        self.covariance(self.fading.beta_direct_user[k], self.fading.beta_ris_user[k])
    }

    /// Aggregate covariance `Q_E` of each eavesdropper antenna.
    pub fn eve_covariance(&self) -> CMat {
        self.covariance(self.fading.beta_direct_eve, self.fading.beta_ris_eve)
    }

    /// Effective RIS correlation `R̃` for path loss `beta`, as a dense matrix.
    pub fn effective_ris_correlation(&self, beta: f64) -> DMatrix<f64> {
        let n = self.dims.n;
        let r = self.r_ris.clone().unwrap_or_else(|| DMatrix::identity(n, n)) * beta;
        effective_ris_correlation(&r, beta, self.varrho).expect("varrho validated at construction")
    }

    fn ris_draw<R: Rng + ?Sized>(&self, rng: &mut R, beta: f64, cols: usize) -> CMat {
        let g = complex_normal_mat(rng, self.dims.n, cols);
        let scaled = match &self.ris_sqrt {
            RisSqrt::Identity => g,
            RisSqrt::Dense(s) => s * g,
        };
        scaled * cplx(beta.sqrt())
    }

    /// One coherence block: phase errors, small-scale fading for every user
    /// and for Eve, and the aggregate channels.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelRealization {
        let d = self.dims;
        let theta = CVec::from_fn(d.n, |_, _| Complex64::from_polar(1.0, self.phase_noise.sample(rng)));
        let effective = self.effective_cascade(&theta);

        let mut h_ris = Vec::with_capacity(d.k);
        let mut h_direct = Vec::with_capacity(d.k);
        let mut h = Vec::with_capacity(d.k);
        for k in 0..d.k {
            let hi = self.ris_draw(rng, self.fading.beta_ris_user[k], 1).column(0).into_owned();
            let hb = &self.r_bs_sqrt * complex_normal_vec(rng, d.m) * cplx(self.fading.beta_direct_user[k].sqrt());
            h.push(&effective * &hi + &hb);
            h_ris.push(hi);
            h_direct.push(hb);
        }
        let h_ris_eve = self.ris_draw(rng, self.fading.beta_ris_eve, d.m_e);
        let h_direct_eve = &self.r_bs_sqrt * complex_normal_mat(rng, d.m, d.m_e) * cplx(self.fading.beta_direct_eve.sqrt());
        let h_eve = &effective * &h_ris_eve + &h_direct_eve;
        ChannelRealization {
            theta,
            h_ris,
            h_direct,
            h_ris_eve,
            h_direct_eve,
            h,
            h_eve,
        }
    }

    /// `H₁ΦΘ` for a given phase-error diagonal.
    pub fn effective_cascade(&self, theta: &CVec) -> CMat {
        let mut g = self.cascade.clone();
        for (b, mut col) in g.column_iter_mut().enumerate() {
            col *= theta[b];
        }
        g
    }
}

#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// Diagonal of the phase-error matrix `Θ`.
    pub theta: CVec,
    pub h_ris: Vec<CVec>,
    pub h_direct: Vec<CVec>,
    /// `N × M_E`.
    pub h_ris_eve: CMat,
    /// `M × M_E`.
    pub h_direct_eve: CMat,
    /// Aggregate user channels.
    pub h: Vec<CVec>,
    /// Aggregate eavesdropper channel, `M × M_E`.
    pub h_eve: CMat,
}

impl ChannelRealization {
    /// Aggregate channels stacked as columns, `M × K`.
    pub fn user_matrix(&self) -> CMat {
        CMat::from_columns(&self.h)
    }
}
