//! Coverage probability and mobility-aware throughput for a single-tier
//! Poisson cellular downlink under three association schemes:
//!
//! - always best connected (serve from the nearest BS),
//! - handover skipping without cooperation (serve from the second-nearest BS
//!   while the skipped nearest BS interferes),
//! - handover skipping with non-coherent two-BS CoMP (second- and
//!   third-nearest BSs transmit jointly).
//!
//! Every coverage quantity is available both analytically ([`coverage`],
//! evaluated by nested adaptive quadrature) and empirically ([`montecarlo`],
//! an independent simulation of the point process with Rayleigh fading).

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coverage;
pub mod distances;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod numerics;
pub mod throughput;

pub use error::{Error, Result};
pub use model::{
    db_to_linear, linear_to_db, validate_scheme, Association, MobilityParams, NetworkParams, OrderedDistances,
    OverheadParams, SchemeSpec, SinrThreshold,
};
