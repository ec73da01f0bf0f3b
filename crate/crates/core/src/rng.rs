//! Reproducible random streams and the few distributions the simulator needs.
//!
//! A single master seed fans out into independent ChaCha streams addressed by
//! `(domain, index)`. Work units draw only from their own stream, so results do
//! not depend on how work is scheduled across threads.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{CMat, CVec};

pub type StreamRng = ChaCha8Rng;

/// Stream domains. Keeping them distinct guarantees that, say, the LoS angle
/// draw never shares randomness with the Monte Carlo blocks.
pub mod domain {
    pub const LOS_ANGLES: u64 = 1;
    pub const SCENARIO: u64 = 2;
    pub const BLOCKS: u64 = 3;
    pub const PILOT_BLOCKS: u64 = 4;
    pub const CALIBRATION: u64 = 5;
    pub const TEST: u64 = 99;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamFactory {
    master: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl StreamFactory {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn master_seed(&self) -> u64 {
        self.master
    }

    /// Independent stream for work unit `index` within `domain`.
    pub fn stream(&self, domain: u64, index: u64) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(self.master ^ splitmix64(domain)));
        rng.set_stream(index);
        rng
    }

    /// A child factory whose streams are disjoint from this one's.
    pub fn child(&self, tag: u64) -> StreamFactory {
        StreamFactory::new(splitmix64(self.master.wrapping_add(splitmix64(tag ^ 0xA5A5_A5A5))))
    }
}

/// One draw from CN(0, 1).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn complex_normal_vec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| complex_normal(rng))
}

pub fn complex_normal_mat<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    // Column-major fill keeps the draw order fixed by (rows, cols).
    let mut out = CMat::zeros(rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            out[(r, c)] = complex_normal(rng);
        }
    }
    out
}

/// Exact von Mises sampler on (−π, π] with zero mean (Best and Fisher 1979).
pub fn von_mises<R: Rng + ?Sized>(rng: &mut R, concentration: f64) -> f64 {
    if concentration < 1e-8 {
        return PI * (2.0 * rng.random::<f64>() - 1.0);
    }
    let k = concentration;
    let tau = 1.0 + (1.0 + 4.0 * k * k).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * k);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = k * (r - f);
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let u3: f64 = rng.random();
            let angle = f.clamp(-1.0, 1.0).acos();
            return if u3 > 0.5 { angle } else { -angle };
        }
    }
}
