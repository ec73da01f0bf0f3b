//! Monte Carlo oracle for the closed forms.
//!
//! Every coherence block draws its own phase errors, fading, pilot noise and
//! distortion from a dedicated random stream, runs the LMMSE estimator and the
//! MRT/AN precoder, and records the conditional expectations that appear in
//! the rate and eavesdropper-capacity expressions. Blocks are processed in
//! parallel, collected in block order and reduced sequentially, so results
//! are bit-identical for any thread count.

use nalgebra::Cholesky;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::simulate_pilot_phase;
use crate::geometry::{ChannelModel, ChannelRealization};
use crate::linalg::{cplx, trace_re, CMat, CVec};
use crate::precoding::{mrt_precoder, null_space_an, transmit_statistics_from_covariance, PowerAllocation, TransmitStatistics};
use crate::rates::jamming_moments;
use crate::rng::{domain, StreamFactory, StreamRng};
use crate::statistics::ChannelStatistics;

/// Which transmit covariance drives the distortion terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistortionStatistics {
    /// `E{xx^H}` over the channel ensemble, estimated from calibration blocks.
    Ensemble,
    /// `pWW^H + qVV^H` of the current block.
    PerRealization,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialPlan {
    pub n_blocks: usize,
    /// Pilot-phase redraws per channel realization in NMSE runs.
    pub n_inner: usize,
    pub master_seed: u64,
    /// Blocks used to estimate the ensemble transmit covariance.
    pub calibration_blocks: usize,
    pub distortion: DistortionStatistics,
    /// Add `10⁻¹²·P_t` to the eavesdropper's interference matrix when it
    /// would otherwise vanish (no AN and an ideal BS transmitter).
    pub regularize_eve: bool,
}

impl TrialPlan {
    pub fn new(n_blocks: usize, master_seed: u64) -> Self {
        Self {
            n_blocks,
            n_inner: 1,
            master_seed,
            calibration_blocks: 500,
            distortion: DistortionStatistics::Ensemble,
            regularize_eve: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_blocks < 2 {
            return Err(Error::invalid("n_blocks", "need at least two blocks for a standard error"));
        }
        if self.n_inner == 0 {
            return Err(Error::invalid("n_inner", "must be positive"));
        }
        if self.distortion == DistortionStatistics::Ensemble && self.calibration_blocks == 0 {
            return Err(Error::invalid("calibration_blocks", "must be positive for ensemble distortion statistics"));
        }
        Ok(())
    }

    fn factory(&self) -> StreamFactory {
        StreamFactory::new(self.master_seed)
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub se: f64,
}

impl MeanEstimate {
    pub fn from_samples(x: &[f64]) -> Self {
        let n = x.len() as f64;
        let mean = pairwise_sum(x) / n;
        let dev: Vec<f64> = x.iter().map(|v| (v - mean) * (v - mean)).collect();
        let var = if x.len() > 1 { pairwise_sum(&dev) / (n - 1.0) } else { 0.0 };
        Self {
            mean,
            se: (var / n).sqrt(),
        }
    }

    fn scaled(self, s: f64) -> Self {
        Self {
            mean: self.mean * s,
            se: self.se * s.abs(),
        }
    }

    /// Distance to `value` in standard errors.
    pub fn z_score(&self, value: f64) -> f64 {
        if self.se > 0.0 {
            (self.mean - value).abs() / self.se
        } else if self.mean == value {
            0.0
        } else {
            f64::INFINITY
        }
    }

    pub fn within(&self, value: f64, sigmas: f64) -> bool {
        self.z_score(value) <= sigmas
    }
}

/// Sequential pairwise summation; the split points depend only on the length.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 8 {
        return x.iter().sum();
    }
    let mid = x.len() / 2;
    pairwise_sum(&x[..mid]) + pairwise_sum(&x[mid..])
}

fn mean_of(x: &[f64]) -> f64 {
    pairwise_sum(x) / x.len() as f64
}

/// Oracle counterparts of the rate-expression terms for one user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UserTerms {
    pub signal: MeanEstimate,
    pub multiuser: MeanEstimate,
    pub self_uncertainty: MeanEstimate,
    pub an_leakage: MeanEstimate,
    pub hardware: MeanEstimate,
    pub noise: f64,
    /// `E{‖V^H h_k‖²}` without the AN power.
    pub an_projection: MeanEstimate,
    /// `Var{h_k^H w_k}` without the data power.
    pub gain_variance: MeanEstimate,
    pub sinr: MeanEstimate,
    pub rate: MeanEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WishartMoments {
    /// `E{tr(X)}/M_E`.
    pub first: MeanEstimate,
    pub first_predicted: f64,
    /// Mean `|X_ij|²` over off-diagonal entries, or `Var{X_11}` when `M_E = 1`.
    pub second: MeanEstimate,
    pub second_predicted: f64,
    /// Mean diagonal entry of the BS transmit distortion covariance.
    pub transmit_distortion: MeanEstimate,
    pub transmit_distortion_predicted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleEstimates {
    pub blocks: usize,
    pub nmse: Vec<MeanEstimate>,
    pub users: Vec<UserTerms>,
    /// `E{log₂(1 + γ_E)}` per targeted user; empty without an eavesdropper.
    pub eve_capacity: Vec<MeanEstimate>,
    pub wishart: Option<WishartMoments>,
    /// Regularization added to the eavesdropper's interference matrix, if any.
    pub eve_regularization: Option<f64>,
}

#[derive(Debug, Clone, Default)]
struct BlockRecord {
    gain: Vec<Complex64>,
    gain_sq: Vec<f64>,
    multiuser: Vec<f64>,
    an: Vec<f64>,
    hardware: Vec<f64>,
    error: Vec<f64>,
    eve_rate: Vec<f64>,
    eve_trace: f64,
    eve_second: f64,
    transmit_distortion: f64,
}

struct Simulator<'a> {
    model: &'a ChannelModel,
    stats: &'a ChannelStatistics,
    alloc: &'a PowerAllocation,
    plan: &'a TrialPlan,
    factory: StreamFactory,
    expected_norms: Vec<f64>,
}

struct Downlink {
    real: ChannelRealization,
    estimates: Vec<CVec>,
    w: CMat,
    v: Option<CMat>,
}

impl<'a> Simulator<'a> {
    fn new(model: &'a ChannelModel, stats: &'a ChannelStatistics, alloc: &'a PowerAllocation, plan: &'a TrialPlan) -> Result<Self> {
        plan.validate()?;
        let d = model.dims;
        if stats.users.len() != d.k || alloc.m != d.m || alloc.k != d.k {
            return Err(Error::Dimension("model, statistics and power allocation disagree on M or K".into()));
        }
        let tr = stats.pilots.tau as f64 * stats.pilots.power;
        Ok(Self {
            model,
            stats,
            alloc,
            plan,
            factory: plan.factory(),
            expected_norms: stats.users.iter().map(|u| tr * u.zeta).collect(),
        })
    }

    fn downlink(&self, rng: &mut StreamRng) -> Result<Downlink> {
        let real = self.model.sample(rng);
        let obs = simulate_pilot_phase(&real, &self.stats.pilots, &self.stats.hw, rng);
        let estimates: Vec<CVec> = self.stats.users.iter().zip(&obs.despread).map(|(u, y)| &u.estimator * y).collect();
        let w = mrt_precoder(&estimates, &self.expected_norms)?;
        let v = if self.alloc.q() > 0.0 {
            Some(null_space_an(&CMat::from_columns(&estimates))?.basis)
        } else {
            None
        };
        Ok(Downlink { real, estimates, w, v })
    }

    fn covariance(&self, dl: &Downlink) -> CMat {
        let mut t = &dl.w * dl.w.adjoint() * cplx(self.alloc.p());
        if let Some(v) = &dl.v {
            t += v * v.adjoint() * cplx(self.alloc.q());
        }
        t
    }

    fn needs_distortion(&self) -> bool {
        let hw = &self.stats.hw;
        hw.kappa_t_bs > 0.0 || hw.kappa_r_ue > 0.0
    }

    /// Ensemble transmit covariance from calibration blocks on their own streams.
    fn calibrate(&self) -> Result<Option<TransmitStatistics>> {
        if self.plan.distortion != DistortionStatistics::Ensemble || !self.needs_distortion() {
            return Ok(None);
        }
        let n = self.plan.calibration_blocks;
        let covs: Vec<CMat> = (0..n)
            .into_par_iter()
            .map(|b| {
                let mut rng = self.factory.stream(domain::CALIBRATION, b as u64);
                self.downlink(&mut rng).map(|dl| self.covariance(&dl))
            })
            .collect::<Result<_>>()?;
        let m = self.model.dims.m;
        let sum = covs.iter().fold(CMat::zeros(m, m), |acc, c| acc + c);
        let hw = &self.stats.hw;
        Ok(Some(transmit_statistics_from_covariance(sum / cplx(n as f64), hw.kappa_t_bs, hw.kappa_r_ue)))
    }

    fn eve_regularization(&self) -> Option<f64> {
        (self.plan.regularize_eve && self.alloc.q() == 0.0 && self.stats.hw.kappa_t_bs == 0.0)
            .then_some(1e-12 * self.alloc.total_power)
    }

    fn block(&self, index: usize, ensemble: Option<&TransmitStatistics>, eve_reg: Option<f64>) -> Result<BlockRecord> {
        let mut rng = self.factory.stream(domain::BLOCKS, index as u64);
        let dl = self.downlink(&mut rng)?;
        let hw = &self.stats.hw;
        let k_users = self.model.dims.k;
        let own;
        let tx: Option<&TransmitStatistics> = match (ensemble, self.needs_distortion()) {
            (Some(t), _) => Some(t),
            (None, true) => {
                own = transmit_statistics_from_covariance(self.covariance(&dl), hw.kappa_t_bs, hw.kappa_r_ue);
                Some(&own)
            }
            (None, false) => None,
        };

        let mut rec = BlockRecord::default();
        let gains = dl.w.adjoint() * dl.real.user_matrix(); // (i, k) = w_i^H h_k
        for k in 0..k_users {
            let h = &dl.real.h[k];
            let a = gains[(k, k)].conj();
            rec.gain.push(a);
            rec.gain_sq.push(a.norm_sqr());
            rec.multiuser.push((0..k_users).filter(|&i| i != k).map(|i| gains[(i, k)].norm_sqr()).sum());
            rec.an.push(dl.v.as_ref().map_or(0.0, |v| (v.adjoint() * h).norm_squared()));
            rec.hardware.push(tx.map_or(0.0, |t| t.transmit_distortion(h) + t.receive_distortion(h)));
            rec.error.push((h - &dl.estimates[k]).norm_squared());
        }

        let m_e = self.model.dims.m_e;
        if m_e > 0 {
            let he = &dl.real.h_eve;
            let mut jam = CMat::zeros(self.model.dims.m, self.model.dims.m);
            if let Some(v) = &dl.v {
                jam += v * v.adjoint() * cplx(self.alloc.q());
            }
            if let Some(t) = tx {
                for (i, d) in t.distortion.iter().enumerate() {
                    jam[(i, i)] += cplx(*d);
                }
            }
            let mut x = he.adjoint() * &jam * he;
            rec.eve_trace = trace_re(&x) / m_e as f64;
            rec.eve_second = if m_e > 1 {
                let mut s = 0.0;
                for i in 0..m_e {
                    for j in 0..m_e {
                        if i != j {
                            s += x[(i, j)].norm_sqr();
                        }
                    }
                }
                s / (m_e * (m_e - 1)) as f64
            } else {
                x[(0, 0)].re
            };
            rec.transmit_distortion = tx.map_or(0.0, |t| t.distortion.sum() / t.distortion.len() as f64);
            if let Some(reg) = eve_reg {
                for i in 0..m_e {
                    x[(i, i)] += cplx(reg);
                }
            }
            let chol = Cholesky::new(x).ok_or_else(|| {
                if self.alloc.q() == 0.0 && hw.kappa_t_bs == 0.0 {
                    Error::UnboundedEveCapacity("eavesdropper interference matrix vanishes without AN and transmit distortion".into())
                } else {
                    Error::IllConditioned { condition: f64::INFINITY }
                }
            })?;
            for k in 0..k_users {
                let f = he.adjoint() * dl.w.column(k);
                let g = chol.solve(&f);
                let gamma = self.alloc.p() * f.dotc(&g).re;
                rec.eve_rate.push(gamma.ln_1p() / std::f64::consts::LN_2);
            }
        }
        Ok(rec)
    }

    fn run(&self) -> Result<OracleEstimates> {
        let ensemble = self.calibrate()?;
        let eve_reg = self.eve_regularization();
        let records: Vec<BlockRecord> = (0..self.plan.n_blocks)
            .into_par_iter()
            .map(|b| self.block(b, ensemble.as_ref(), eve_reg))
            .collect::<Result<_>>()?;
        Ok(self.reduce(&records, eve_reg))
    }

    fn reduce(&self, records: &[BlockRecord], eve_reg: Option<f64>) -> OracleEstimates {
        let k_users = self.model.dims.k;
        let col = |f: &dyn Fn(&BlockRecord) -> f64| records.iter().map(f).collect::<Vec<f64>>();
        let p = self.alloc.p();
        let q = self.alloc.q();
        let noise = self.stats.hw.downlink_noise;
        let mut users = Vec::with_capacity(k_users);
        let mut nmse = Vec::with_capacity(k_users);
        for k in 0..k_users {
            let features = [
                col(&|r| r.gain[k].re),
                col(&|r| r.gain[k].im),
                col(&|r| r.gain_sq[k]),
                col(&|r| r.multiuser[k]),
                col(&|r| r.an[k]),
                col(&|r| r.hardware[k]),
            ];
            let moments = Moments::new(&features);
            let m = &moments.mean;
            let s = m[0] * m[0] + m[1] * m[1];
            let den = p * (m[3] + m[2] - s) + q * m[4] + m[5] + noise;
            let gamma = p * s / den;
            let d2 = den * den;
            let g_sinr = [
                2.0 * p * m[0] * (den + p * s) / d2,
                2.0 * p * m[1] * (den + p * s) / d2,
                -p * p * s / d2,
                -p * p * s / d2,
                -p * s * q / d2,
                -p * s / d2,
            ];
            let sinr = moments.delta(gamma, &g_sinr);
            let rate_scale = 1.0 / ((1.0 + gamma) * std::f64::consts::LN_2);
            let gain_variance = moments.delta(m[2] - s, &[-2.0 * m[0], -2.0 * m[1], 1.0, 0.0, 0.0, 0.0]);
            users.push(UserTerms {
                signal: moments.delta(p * s, &[2.0 * p * m[0], 2.0 * p * m[1], 0.0, 0.0, 0.0, 0.0]),
                multiuser: moments.single(3).scaled(p),
                self_uncertainty: gain_variance.scaled(p),
                an_leakage: moments.single(4).scaled(q),
                hardware: moments.single(5),
                noise,
                an_projection: moments.single(4),
                gain_variance,
                sinr,
                rate: MeanEstimate {
                    mean: gamma.ln_1p() / std::f64::consts::LN_2,
                    se: sinr.se * rate_scale,
                },
            });
            let tr_r = trace_re(&self.stats.users[k].r);
            nmse.push(MeanEstimate::from_samples(&col(&|r| r.error[k])).scaled(1.0 / tr_r));
        }

        let m_e = self.model.dims.m_e;
        let (eve_capacity, wishart) = if m_e > 0 {
            let caps = (0..k_users).map(|k| MeanEstimate::from_samples(&col(&|r| r.eve_rate[k]))).collect();
            let (b, d) = jamming_moments(self.alloc, &self.stats.hw);
            let m = self.model.dims.m as f64;
            let q_e = &self.stats.q_e;
            let tr_q = trace_re(q_e);
            let tr_q2 = crate::linalg::trace_of_product(q_e, q_e);
            let second = if m_e > 1 {
                MeanEstimate::from_samples(&col(&|r| r.eve_second))
            } else {
                let x = col(&|r| r.eve_second);
                let mean = mean_of(&x);
                MeanEstimate::from_samples(&x.iter().map(|v| (v - mean) * (v - mean)).collect::<Vec<_>>())
            };
            let wishart = WishartMoments {
                first: MeanEstimate::from_samples(&col(&|r| r.eve_trace)),
                first_predicted: tr_q * b / m,
                second,
                second_predicted: tr_q2 * d / m,
                transmit_distortion: MeanEstimate::from_samples(&col(&|r| r.transmit_distortion)),
                transmit_distortion_predicted: self.stats.hw.kappa_t_bs * self.alloc.total_power / m,
            };
            (caps, Some(wishart))
        } else {
            (Vec::new(), None)
        };

        OracleEstimates {
            blocks: records.len(),
            nmse,
            users,
            eve_capacity,
            wishart,
            eve_regularization: eve_reg,
        }
    }
}

/// Sample means and covariance of a few per-block features, for delta-method
/// standard errors of smooth functions of the means.
struct Moments {
    n: usize,
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
}

impl Moments {
    fn new(features: &[Vec<f64>]) -> Self {
        let n = features[0].len();
        let mean: Vec<f64> = features.iter().map(|f| mean_of(f)).collect();
        let d = features.len();
        let mut cov = vec![vec![0.0; d]; d];
        for i in 0..d {
            for j in i..d {
                let prod: Vec<f64> = features[i].iter().zip(&features[j]).map(|(a, b)| (a - mean[i]) * (b - mean[j])).collect();
                let c = pairwise_sum(&prod) / (n as f64 - 1.0);
                cov[i][j] = c;
                cov[j][i] = c;
            }
        }
        Self { n, mean, cov }
    }

    fn delta(&self, value: f64, grad: &[f64]) -> MeanEstimate {
        let mut var = 0.0;
        for (i, gi) in grad.iter().enumerate() {
            for (j, gj) in grad.iter().enumerate() {
                var += gi * gj * self.cov[i][j];
            }
        }
        MeanEstimate {
            mean: value,
            se: (var.max(0.0) / self.n as f64).sqrt(),
        }
    }

    fn single(&self, i: usize) -> MeanEstimate {
        MeanEstimate {
            mean: self.mean[i],
            se: (self.cov[i][i] / self.n as f64).sqrt(),
        }
    }
}

/// Full downlink simulation: user-rate terms, NMSE, eavesdropper capacity and
/// Wishart moment checks from the same blocks.
pub fn simulate(model: &ChannelModel, stats: &ChannelStatistics, alloc: &PowerAllocation, plan: &TrialPlan) -> Result<OracleEstimates> {
    Simulator::new(model, stats, alloc, plan)?.run()
}

pub fn estimate_user_rate(
    model: &ChannelModel,
    stats: &ChannelStatistics,
    alloc: &PowerAllocation,
    plan: &TrialPlan,
) -> Result<Vec<UserTerms>> {
    Ok(simulate(model, stats, alloc, plan)?.users)
}

pub fn estimate_eve_capacity(
    model: &ChannelModel,
    stats: &ChannelStatistics,
    alloc: &PowerAllocation,
    plan: &TrialPlan,
) -> Result<Vec<MeanEstimate>> {
    Ok(simulate(model, stats, alloc, plan)?.eve_capacity)
}

pub fn estimate_wishart_moments(
    model: &ChannelModel,
    stats: &ChannelStatistics,
    alloc: &PowerAllocation,
    plan: &TrialPlan,
) -> Result<Option<WishartMoments>> {
    Ok(simulate(model, stats, alloc, plan)?.wishart)
}

/// NMSE from the pilot phase alone; each of `n_blocks` channel realizations
/// is observed through `n_inner` independent pilot blocks.
pub fn estimate_nmse(model: &ChannelModel, stats: &ChannelStatistics, plan: &TrialPlan) -> Result<Vec<MeanEstimate>> {
    plan.validate()?;
    let factory = plan.factory();
    let k_users = model.dims.k;
    let errors: Vec<Vec<f64>> = (0..plan.n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = factory.stream(domain::PILOT_BLOCKS, b as u64);
            let real = model.sample(&mut rng);
            let mut acc = vec![0.0; k_users];
            for _ in 0..plan.n_inner {
                let obs = simulate_pilot_phase(&real, &stats.pilots, &stats.hw, &mut rng);
                for (k, u) in stats.users.iter().enumerate() {
                    acc[k] += (&real.h[k] - &u.estimator * &obs.despread[k]).norm_squared();
                }
            }
            acc.iter().map(|e| e / plan.n_inner as f64).collect()
        })
        .collect();
    Ok((0..k_users)
        .map(|k| {
            let tr_r = trace_re(&stats.users[k].r);
            MeanEstimate::from_samples(&errors.iter().map(|e| e[k]).collect::<Vec<_>>()).scaled(1.0 / tr_r)
        })
        .collect())
}
