//! Secure multiuser massive MIMO aided by a reconfigurable intelligent surface,
//! under transceiver hardware impairments, RIS phase noise, imperfect CSI and
//! spatially correlated fading.
//!
//! The crate provides the deterministic channel statistics, the LMMSE
//! estimator, MRT and null-space artificial-noise precoding, closed-form
//! achievable-rate and secrecy-rate expressions, the power-split optimizer, and
//! a Monte Carlo oracle that checks each closed form against simulation.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimation;
pub mod experiments;
pub mod geometry;
pub mod linalg;
pub mod montecarlo;
pub mod power;
pub mod precoding;
pub mod rates;
pub mod rng;
pub mod special;
pub mod statistics;

pub use error::{Error, Result};
pub use estimation::{HardwareProfile, PilotConfig};
pub use geometry::{
    ChannelModel, ChannelRealization, CorrelationSpec, LargeScaleFading, PhaseNoiseKind, PhaseNoiseModel,
    RisCorrelationModel, SystemDimensions,
};
pub use linalg::{CMat, CVec};
pub use precoding::PowerAllocation;
pub use rates::{RateTerms, SecrecyReport};
pub use rng::StreamFactory;
pub use statistics::{ChannelStatistics, TraceSummary};
