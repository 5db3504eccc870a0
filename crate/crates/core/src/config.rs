use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters shared by every protocol instance in a session.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    /// Number of addends each scalar is split into by the Hadamard and
    /// DReLU encodings.
    pub rho: usize,
    /// Rounds of the random 0/1 verification check, per party.
    pub verify_rounds: usize,
    /// Bound for commodity-server masks and random output shares, which are
    /// drawn uniformly from `[-mask_scale, mask_scale]`.
    pub mask_scale: f64,
    pub seed: u64,
}

impl SplitConfig {
    pub const DEFAULT_RHO: usize = 2;
    pub const DEFAULT_VERIFY_ROUNDS: usize = 10;
    pub const DEFAULT_MASK_SCALE: f64 = 1.0;

    pub fn new(rho: usize, verify_rounds: usize, mask_scale: f64, seed: u64) -> Result<Self> {
        let cfg = Self {
            rho,
            verify_rounds,
            mask_scale,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rho < 2 {
            return Err(Error::usage(format!("rho must be >= 2, got {}", self.rho)));
        }
        if self.verify_rounds < 1 {
            return Err(Error::usage("verify_rounds must be >= 1"));
        }
        if !(self.mask_scale.is_finite() && self.mask_scale > 0.0) {
            return Err(Error::usage(format!(
                "mask_scale must be positive, got {}",
                self.mask_scale
            )));
        }
        Ok(())
    }
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            rho: Self::DEFAULT_RHO,
            verify_rounds: Self::DEFAULT_VERIFY_ROUNDS,
            mask_scale: Self::DEFAULT_MASK_SCALE,
            seed: 0,
        }
    }
}
