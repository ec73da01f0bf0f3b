//! Choice of the data/artificial-noise power split `ξ`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rates::SplitTerms;

fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / std::f64::consts::LN_2
}

/// Constants of the secrecy rate written as an explicit function of `ξ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitCoefficients {
    pub signal: f64,
    pub psi: f64,
    pub noise: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub a5: f64,
    pub l1: f64,
    pub kappa_t_bs: f64,
    pub k: usize,
    pub m: usize,
    pub m_e: usize,
}

impl SplitCoefficients {
    pub fn new(split: &SplitTerms, m_e: usize) -> Self {
        let m = split.m as f64;
        let k = split.k as f64;
        let me = m_e as f64;
        let kt = split.kappa_t_bs;
        Self {
            signal: split.signal_gain,
            psi: split.leakage_slope,
            noise: split.split_noise,
            a1: me * m * split.eve_leakage,
            a2: k * split.tr_q * split.tr_q,
            a3: me * m * k / (m - k) * split.tr_q2,
            a4: 2.0 * me * k * kt * split.tr_q2,
            a5: me * k * kt * (kt + 2.0) * split.tr_q2,
            l1: split.tr_q * split.tr_q - me * m / (m - k) * split.tr_q2,
            kappa_t_bs: kt,
            k: split.k,
            m: split.m,
            m_e,
        }
    }

    /// `M_E K/M²`, small in the regime where the closed-form optimum applies.
    pub fn regime_ratio(&self) -> f64 {
        (self.m_e * self.k) as f64 / (self.m * self.m) as f64
    }

    fn eve_denominator(&self, xi: f64) -> f64 {
        let u = 1.0 - xi + self.kappa_t_bs;
        let a = 1.0 - xi;
        u * u * self.a2 - a * a * self.a3 + xi * self.a4 - self.a5
    }

    /// Unclipped secrecy rate; `None` where the eavesdropper bound is invalid.
    pub fn secrecy_difference(&self, xi: f64) -> Option<f64> {
        let den = self.eve_denominator(xi);
        if !(den > 0.0) {
            return None;
        }
        let u = 1.0 - xi + self.kappa_t_bs;
        let user = xi * self.signal / (xi * self.psi + self.noise);
        Some(log2_1p(user) - log2_1p(xi * u * self.a1 / den))
    }

    pub fn secrecy_rate(&self, xi: f64) -> f64 {
        self.secrecy_difference(xi).unwrap_or(0.0).max(0.0)
    }

    fn user_slope(&self, xi: f64) -> f64 {
        let base = xi * self.psi + self.noise;
        self.signal * self.noise / (std::f64::consts::LN_2 * base * (base + xi * self.signal))
    }

    /// Exact derivative of the unclipped secrecy rate.
    pub fn derivative(&self, xi: f64) -> f64 {
        let kt = self.kappa_t_bs;
        let u = 1.0 - xi + kt;
        let den = self.eve_denominator(xi);
        let dden = self.a2 * (2.0 * xi - 2.0 - 2.0 * kt) - self.a3 * (2.0 * xi - 2.0) + self.a4;
        let num = self.a1 * (1.0 - 2.0 * xi + kt) * den - xi * u * self.a1 * dden;
        self.user_slope(xi) - num / (std::f64::consts::LN_2 * den * (den + xi * u * self.a1))
    }

    /// Derivative with the eavesdropper term simplified for `M_E K/M² ≪ 1`.
    pub fn derivative_approx(&self, xi: f64) -> f64 {
        let u = 1.0 - xi + self.kappa_t_bs;
        let k = self.k as f64;
        let eve = (1.0 + self.kappa_t_bs) * self.a1 / (std::f64::consts::LN_2 * (u * u * k * self.l1 + xi * u * self.a1));
        self.user_slope(xi) - eve
    }

    /// Quadratic `aξ² − bξ + c = 0` whose root zeroes the approximate derivative.
    pub fn quadratic(&self) -> (f64, f64, f64) {
        let s = self.signal;
        let d = self.noise;
        let psi = self.psi;
        let k = self.k as f64;
        let kp = 1.0 + self.kappa_t_bs;
        let a = s * d * (self.l1 * k - self.a1) - (psi * psi + psi * s) * kp * self.a1;
        let b = kp * (2.0 * s * d * self.l1 * k - s * d * self.a1 + d * self.a1 * (2.0 * psi + s));
        let c = kp * kp * s * d * self.l1 * k - kp * d * d * self.a1;
        (a, b, c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct XiSolution {
    pub xi: f64,
    /// The other root of the quadratic, if real.
    pub other_root: Option<f64>,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Approximate derivative evaluated at `xi`.
    pub derivative_at_solution: f64,
    /// `xi` lies in `(0, 1]`.
    pub valid: bool,
    /// `M_E K/M² ≤ 0.01`; outside it prefer [`grid_search_xi`].
    pub in_regime: bool,
    pub note: Option<String>,
}

const REGIME_LIMIT: f64 = 0.01;

/// Closed-form power split from the approximate stationarity condition.
///
/// Both roots are computed; the smaller-magnitude branch
/// `(b − √(b² − 4ac))/(2a)` is preferred and the other is used only when the
/// preferred one falls outside `(0, 1]`.
pub fn optimal_xi(coeffs: &SplitCoefficients) -> Result<XiSolution> {
    let (a, b, c) = coeffs.quadratic();
    if ![a, b, c].iter().all(|x| x.is_finite()) {
        return Err(Error::invalid("coefficients", "quadratic constants are not finite"));
    }
    let in_regime = coeffs.regime_ratio() <= REGIME_LIMIT;
    let mut note = (!in_regime).then(|| {
        format!(
            "M_E K/M^2 = {:.4} exceeds {REGIME_LIMIT}; the closed form is approximate, use the grid search",
            coeffs.regime_ratio()
        )
    });
    let scale = a.abs().max(b.abs()).max(c.abs());
    let (xi, other_root) = if a.abs() <= 1e-14 * scale {
        if b == 0.0 {
            return Err(Error::NoRealRoot(0.0));
        }
        note = Some("quadratic degenerates to a linear equation; using ξ = c/b".into());
        (c / b, None)
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return Err(Error::NoRealRoot(disc));
        }
        let sq = disc.sqrt();
        // cancellation-free roots
        let big = (b + b.signum() * sq) / (2.0 * a);
        let small = if big != 0.0 { c / (a * big) } else { (b - sq) / (2.0 * a) };
        let (minus, plus) = if b >= 0.0 { (small, big) } else { (big, small) };
        let in_range = |x: f64| x > 0.0 && x <= 1.0;
        if in_range(minus) || !in_range(plus) {
            (minus, Some(plus))
        } else {
            note.get_or_insert_with(|| "the (b + √·) branch was selected".into());
            (plus, Some(minus))
        }
    };
    let valid = xi > 0.0 && xi <= 1.0;
    if !valid {
        note.get_or_insert_with(|| format!("root {xi:.4} lies outside (0, 1]"));
    }
    Ok(XiSolution {
        xi,
        other_root,
        a,
        b,
        c,
        derivative_at_solution: coeffs.derivative_approx(xi),
        valid,
        in_regime,
        note,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GridProfile {
    pub xi: Vec<f64>,
    /// Clipped secrecy rate at each grid point.
    pub secrecy_rate: Vec<f64>,
    pub argmax: f64,
    pub max_rate: f64,
}

impl GridProfile {
    /// Number of strict interior local maxima of the profile.
    pub fn local_maxima(&self) -> usize {
        let r = &self.secrecy_rate;
        let mut count = 0;
        let mut i = 0;
        while i < r.len() {
            // collapse plateaus
            let mut j = i;
            while j + 1 < r.len() && r[j + 1] == r[i] {
                j += 1;
            }
            let left = i == 0 || r[i - 1] < r[i];
            let right = j + 1 == r.len() || r[j + 1] < r[i];
            if left && right && r[i] > 0.0 {
                count += 1;
            }
            i = j + 1;
        }
        count
    }
}

/// Secrecy rate on `ξ ∈ {step, 2·step, …, 1}` with its maximizer.
pub fn grid_search_xi(split: &SplitTerms, m_e: usize, step: f64) -> Result<GridProfile> {
    if !(step > 0.0 && step <= 0.05) {
        return Err(Error::invalid("grid_step", format!("must lie in (0, 0.05], got {step}")));
    }
    let count = (1.0 / step).round() as usize;
    let xi: Vec<f64> = (1..=count).map(|i| (i as f64 * step).min(1.0)).collect();
    let diff: Vec<f64> = xi
        .par_iter()
        .map(|&x| split.secrecy_difference(x, m_e).unwrap_or(f64::NEG_INFINITY))
        .collect();
    let mut best = 0;
    for (i, d) in diff.iter().enumerate() {
        if *d > diff[best] {
            best = i;
        }
    }
    Ok(GridProfile {
        argmax: xi[best],
        max_rate: diff[best].max(0.0),
        secrecy_rate: diff.iter().map(|d| d.max(0.0)).collect(),
        xi,
    })
}
