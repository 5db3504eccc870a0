//! Secure two-party computation over additively shared real matrices, with a
//! commodity server for correlated randomness and a two-party MLP built on
//! top.

pub mod bench;
pub mod config;
pub mod dataset;
pub mod encoding;
pub mod error;
pub mod matrix;
pub mod mlp;
pub mod netsim;
pub mod protocols;
pub mod report;
pub mod rng;
pub mod train;
pub mod transform;

pub use config::SplitConfig;
pub use error::{Error, Result};
pub use matrix::RealMatrix;
pub use netsim::{CommMetrics, NetProfile, PartyId, Phase, Session};
pub use rng::Rng;
