//! MRT information precoding, null-space artificial noise, and the downlink
//! transmit covariance.

use nalgebra::{ColPivQR, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cplx, CMat, CVec};

/// Split of the total transmit power `P_t` between data (`ξ`) and AN (`1 − ξ`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub total_power: f64,
    pub xi: f64,
    pub m: usize,
    pub k: usize,
}

impl PowerAllocation {
    pub fn new(total_power: f64, xi: f64, m: usize, k: usize) -> Result<Self> {
        if !(total_power >= 0.0) || !total_power.is_finite() {
            return Err(Error::invalid("total_power", format!("must be finite and non-negative, got {total_power}")));
        }
        if !(xi > 0.0 && xi <= 1.0) {
            return Err(Error::invalid("xi", format!("must lie in (0, 1], got {xi}")));
        }
        if m <= k || k == 0 {
            return Err(Error::invalid("m", format!("need M > K >= 1, got M = {m}, K = {k}")));
        }
        Ok(Self { total_power, xi, m, k })
    }

    /// Total power `E_u/N` for the power-scaling regime.
    pub fn power_scaled(e_u: f64, n: usize, xi: f64, m: usize, k: usize) -> Result<Self> {
        Self::new(e_u / n as f64, xi, m, k)
    }

    /// Per-user data power `ξP_t/K`.
    pub fn p(&self) -> f64 {
        self.xi * self.total_power / self.k as f64
    }

    /// Per-dimension AN power `(1 − ξ)P_t/(M − K)`.
    pub fn q(&self) -> f64 {
        (1.0 - self.xi) * self.total_power / (self.m - self.k) as f64
    }

    pub fn with_xi(&self, xi: f64) -> Result<Self> {
        Self::new(self.total_power, xi, self.m, self.k)
    }
}

/// `w_k = ĥ_k/√E{‖ĥ_k‖²}` with the statistical normalizer `E{‖ĥ_k‖²} = τρζ_k`.
pub fn mrt_precoder(estimates: &[CVec], expected_norms: &[f64]) -> Result<CMat> {
    if estimates.len() != expected_norms.len() || estimates.is_empty() {
        return Err(Error::Dimension(format!(
            "{} estimates but {} normalizers",
            estimates.len(),
            expected_norms.len()
        )));
    }
    let mut w = CMat::zeros(estimates[0].len(), estimates.len());
    for (k, (h, &e)) in estimates.iter().zip(expected_norms).enumerate() {
        if !(e > 0.0) || !e.is_finite() {
            return Err(Error::Degenerate(format!("user {k} has zero expected estimate power")));
        }
        w.set_column(k, &(h / cplx(e.sqrt())));
    }
    Ok(w)
}

#[derive(Debug, Clone)]
pub struct NullSpace {
    /// Orthonormal basis of the orthogonal complement of the estimate span.
    pub basis: CMat,
    /// Numerical rank of the estimate matrix.
    pub rank: usize,
    /// Set when the estimate matrix is rank deficient.
    pub warning: Option<String>,
}

/// Orthonormal basis `V` with `Ĥ^H V = 0` from a column-pivoted QR of `Ĥ`.
///
/// A rank-deficient `Ĥ` yields a larger complement and a warning.
pub fn null_space_an(h_hat: &CMat) -> Result<NullSpace> {
    let (m, k) = h_hat.shape();
    if m <= k {
        return Err(Error::invalid("m", format!("need more antennas ({m}) than users ({k})")));
    }
    let qr = ColPivQR::new(h_hat.clone());
    let r = qr.r();
    let top = r[(0, 0)].norm();
    let tol = top * (m.max(k) as f64) * f64::EPSILON * 16.0;
    let rank = (0..k).filter(|&i| r[(i, i)].norm() > tol).count();
    let mut full = CMat::identity(m, m);
    qr.q_tr_mul(&mut full);
    let q = full.adjoint();
    let basis = q.columns(rank, m - rank).into_owned();
    let warning = (rank < k).then(|| format!("estimate matrix has rank {rank} < {k}; AN uses a {}-dimensional complement", m - rank));
    Ok(NullSpace { basis, rank, warning })
}

/// Downlink covariance `T = pWW^H + qVV^H` and the distortion statistics it induces.
#[derive(Debug, Clone)]
pub struct TransmitStatistics {
    pub covariance: CMat,
    /// Diagonal of the BS transmit distortion covariance `κ_t^BS diag(T)`.
    pub distortion: DVector<f64>,
    pub kappa_r_ue: f64,
}

impl TransmitStatistics {
    /// Receive distortion power `κ_r^UE h^H T h` at a user with channel `h`.
    pub fn receive_distortion(&self, h: &CVec) -> f64 {
        self.kappa_r_ue * (h.adjoint() * &self.covariance * h)[(0, 0)].re
    }

    /// `h^H Υ_t h` for the BS transmit distortion.
    pub fn transmit_distortion(&self, h: &CVec) -> f64 {
        h.iter().zip(self.distortion.iter()).map(|(z, d)| d * z.norm_sqr()).sum()
    }
}

pub fn transmit_statistics(w: &CMat, v: &CMat, alloc: &PowerAllocation, kappa_t_bs: f64, kappa_r_ue: f64) -> TransmitStatistics {
    let mut t = w * w.adjoint() * cplx(alloc.p());
    if alloc.q() > 0.0 {
        t += v * v.adjoint() * cplx(alloc.q());
    }
    transmit_statistics_from_covariance(t, kappa_t_bs, kappa_r_ue)
}

pub fn transmit_statistics_from_covariance(covariance: CMat, kappa_t_bs: f64, kappa_r_ue: f64) -> TransmitStatistics {
    let distortion = DVector::from_fn(covariance.nrows(), |i, _| kappa_t_bs * covariance[(i, i)].re);
    TransmitStatistics {
        covariance,
        distortion,
        kappa_r_ue,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::trace_re;
    use crate::rng::{complex_normal_mat, domain, StreamFactory};
    use num_complex::Complex64;

    #[test]
    fn allocation_budget() {
        let a = PowerAllocation::new(3.0, 0.4, 10, 4).unwrap();
        assert!((a.p() * 4.0 + a.q() * 6.0 - 3.0).abs() < 1e-15);
        assert!(PowerAllocation::new(1.0, 0.0, 10, 4).is_err());
        assert!(PowerAllocation::new(1.0, 1.1, 10, 4).is_err());
        assert!(PowerAllocation::new(1.0, 0.5, 4, 4).is_err());
        let s = PowerAllocation::power_scaled(100.0, 400, 0.5, 10, 4).unwrap();
        assert!((s.total_power - 0.25).abs() < 1e-15);
    }

    #[test]
    fn coordinate_null_space() {
        let h = CMat::from_column_slice(2, 1, &[cplx(1.0), cplx(0.0)]);
        let ns = null_space_an(&h).unwrap();
        assert_eq!(ns.basis.ncols(), 1);
        assert!(ns.basis[(0, 0)].norm() < 1e-15);
        assert!((ns.basis[(1, 0)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_null_space_residuals() {
        let mut rng = StreamFactory::new(4).stream(domain::TEST, 0);
        for _ in 0..5 {
            let h = complex_normal_mat(&mut rng, 64, 6);
            let ns = null_space_an(&h).unwrap();
            assert_eq!(ns.rank, 6);
            assert!(ns.warning.is_none());
            let v = &ns.basis;
            assert_eq!(v.ncols(), 58);
            assert!((h.adjoint() * v).camax() < 1e-10 * h.camax());
            let gram = v.adjoint() * v;
            assert!((gram - CMat::identity(58, 58)).camax() < 1e-10);
            assert!((trace_re(&(v * v.adjoint())) - 58.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rank_deficient_estimates_widen_complement() {
        let mut rng = StreamFactory::new(5).stream(domain::TEST, 0);
        let a = complex_normal_mat(&mut rng, 8, 2);
        let h = CMat::from_columns(&[a.column(0).into_owned(), a.column(1).into_owned(), a.column(0) * Complex64::new(0.0, 2.0)]);
        let ns = null_space_an(&h).unwrap();
        assert_eq!(ns.rank, 2);
        assert_eq!(ns.basis.ncols(), 6);
        assert!(ns.warning.is_some());
        assert!((h.adjoint() * &ns.basis).camax() < 1e-10);
    }

    #[test]
    fn mrt_scalar_case() {
        let h = CVec::from_element(1, Complex64::new(0.6, 0.8));
        let w = mrt_precoder(std::slice::from_ref(&h), &[4.0]).unwrap();
        assert!((w[(0, 0)] - h[0] / 2.0).norm() < 1e-15);
        assert!(matches!(mrt_precoder(&[h], &[0.0]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn transmit_statistics_corners() {
        let mut rng = StreamFactory::new(6).stream(domain::TEST, 0);
        let h = complex_normal_mat(&mut rng, 6, 2);
        let ns = null_space_an(&h).unwrap();
        let full = PowerAllocation::new(2.0, 1.0, 6, 2).unwrap();
        let t = transmit_statistics(&h, &ns.basis, &full, 0.0, 0.01);
        let want = &h * h.adjoint() * cplx(full.p());
        assert!((&t.covariance - want).camax() < 1e-14);
        assert_eq!(t.distortion.amax(), 0.0);
        let half = PowerAllocation::new(2.0, 0.5, 6, 2).unwrap();
        let t = transmit_statistics(&h, &ns.basis, &half, 0.1, 0.0);
        for i in 0..6 {
            assert!((t.distortion[i] - 0.1 * t.covariance[(i, i)].re).abs() < 1e-15);
        }
        let x = h.column(0).into_owned();
        assert_eq!(t.receive_distortion(&x), 0.0);
    }
}
