//! Monte Carlo simulation of quantum key distribution over fiber networks.
//!
//! The crate compares three protocol families (Decoy-state BB84, the
//! multi-photon 3-stage protocol and repeater-based E91) across six network
//! shapes, and ships the numerical pipeline used to turn key-rate-vs-distance
//! curves into a stable-distance law for multi-photon bursts.
//!
//! Layering, bottom up:
//!
//! - [`topology`]: network shapes, placement for a target Alice–Bob distance, routing.
//! - [`channel`]: fiber attenuation, Bell-measurement redundancy, Bernoulli sampling.
//! - [`photonstats`]: Poisson photon statistics and beamsplitter leakage.
//! - [`protocols`]: per-round stochastic engines.
//! - [`keymgmt`]: key pools, QBER, error-correction penalty, trusted-node XOR relay.
//! - [`experiments`]: deterministic parallel sweeps over distance and burst size.
//! - [`analysis`]: smoothing, sigmoid and polynomial fits, turning points.
//! - [`cli`]: the `qkdsim` command line.
//!
//! ```
//! use qkdsim::experiments::{run_distance_sweep, SweepConfig};
//! use qkdsim::protocols::ProtocolSpec;
//! use qkdsim::topology::{ShapeParams, TopologyKind};
//!
//! let cfg = SweepConfig::distances(
//!     TopologyKind::Direct,
//!     ShapeParams::default(),
//!     ProtocolSpec::three_stage(10),
//!     vec![5.0, 10.0],
//! )
//! .with_rounds(2_000)
//! .with_seed(7);
//! let result = run_distance_sweep(&cfg).unwrap();
//! assert_eq!(result.points.len(), 2);
//! ```

// `!(x > 0.0)` style checks are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod channel;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod keymgmt;
pub mod photonstats;
pub mod protocols;
pub mod topology;

pub use error::{Error, Result};
