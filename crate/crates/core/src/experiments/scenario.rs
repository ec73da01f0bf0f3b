//! Planar deployment: BS at the origin, users and Eve evenly spaced on a
//! circle, RIS at fixed distances from both.

use rand::Rng;
use serde::Serialize;

use super::config::{db_to_linear, GeometryConfig};
use crate::error::{Error, Result};
use crate::geometry::{path_loss, LargeScaleFading};
use crate::rng::{domain, StreamFactory};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub bs: [f64; 2],
    pub ris: [f64; 2],
    pub center: [f64; 2],
    pub users: Vec<[f64; 2]>,
    pub eve: [f64; 2],
    /// Path losses including the receiver gain.
    pub fading: LargeScaleFading,
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// RIS position at `bs_ris_distance` from the BS and `ris_center_distance`
/// from the circle centre, in the upper half-plane.
fn ris_position(g: &GeometryConfig) -> Result<[f64; 2]> {
    let d = g.bs_center_distance;
    let x = (g.bs_ris_distance.powi(2) - g.ris_center_distance.powi(2) + d * d) / (2.0 * d);
    let y2 = g.bs_ris_distance.powi(2) - x * x;
    if y2 < 0.0 {
        return Err(Error::Config(format!(
            "no RIS position is {} m from the BS and {} m from a centre {} m away",
            g.bs_ris_distance, g.ris_center_distance, d
        )));
    }
    Ok([x, y2.sqrt()])
}

/// `K` users and one eavesdropper evenly spaced on the circle with a random
/// common rotation; Eve takes the last slot.
pub fn generate_scenario(g: &GeometryConfig, k: usize, factory: &StreamFactory) -> Result<Scenario> {
    if k == 0 {
        return Err(Error::invalid("k", "need at least one user"));
    }
    let bs = [0.0, 0.0];
    let center = [g.bs_center_distance, 0.0];
    let ris = ris_position(g)?;
    let slots = k + 1;
    let step = std::f64::consts::TAU / slots as f64;
    let rotation = factory.stream(domain::SCENARIO, 0).random::<f64>() * step;
    let points: Vec<[f64; 2]> = (0..slots)
        .map(|i| {
            let a = rotation + i as f64 * step;
            [center[0] + g.circle_radius * a.cos(), center[1] + g.circle_radius * a.sin()]
        })
        .collect();
    let gain = db_to_linear(g.receiver_gain_db);
    let reflected = |p: [f64; 2]| path_loss(distance(p, ris), g.exponent_ris).map(|b| b * gain);
    let direct = |p: [f64; 2]| path_loss(distance(p, bs), g.exponent_direct).map(|b| b * gain);
    let users = points[..k].to_vec();
    let eve = points[k];
    let fading = LargeScaleFading {
        beta_1: path_loss(distance(bs, ris), g.exponent_ris)?,
        beta_ris_user: users.iter().map(|&p| reflected(p)).collect::<Result<_>>()?,
        beta_direct_user: users.iter().map(|&p| direct(p)).collect::<Result<_>>()?,
        beta_direct_eve: direct(eve)?,
        beta_ris_eve: reflected(eve)?,
    };
    Ok(Scenario {
        bs,
        ris,
        center,
        users,
        eve,
        fading,
    })
}
