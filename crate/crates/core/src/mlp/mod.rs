//! Two-party multi-layer perceptron over vertically partitioned features,
//! plus the plaintext network used as its oracle and baseline.
//!
//! Layer `l` has weights of shape `(d_{l-1} + 1) x d_l`; row 0 is the bias.
//! Hidden layers use ReLU, the output layer softmax. Gradients are the raw
//! batch sums `Z^T G` with no `1/B` normalization.

pub mod model;
pub mod plain;
pub mod secure;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::RealMatrix;
use crate::rng::Rng;

pub use plain::PlainModel;
pub use secure::{s2pg_mlp, s2pmlp_bp, s2pmlp_fp, s2pmlp_predict, LayerCache, SecureTrainer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    /// Layer widths `[d_0, ..., d_L]`, input first.
    pub dims: Vec<usize>,
    pub batch: usize,
    pub epochs: usize,
    pub lr: f64,
    /// Seeds weight initialization and, when enabled, epoch shuffling.
    pub seed: u64,
    /// Reorder the training rows every epoch. Off by default: batches are
    /// taken sequentially.
    pub shuffle: bool,
}

impl MlpConfig {
    pub fn new(dims: Vec<usize>, batch: usize, epochs: usize, lr: f64, seed: u64) -> Result<Self> {
        let cfg = Self {
            dims,
            batch,
            epochs,
            lr,
            seed,
            shuffle: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn layers(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.len() < 2 {
            return Err(Error::usage(
                "an MLP needs at least an input and an output width",
            ));
        }
        if self.dims.contains(&0) {
            return Err(Error::usage(format!(
                "layer widths must be >= 1, got {:?}",
                self.dims
            )));
        }
        if self.batch == 0 {
            return Err(Error::usage("batch size must be >= 1"));
        }
        if self.epochs == 0 {
            return Err(Error::usage("epochs must be >= 1"));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::usage(format!(
                "learning rate must be positive, got {}",
                self.lr
            )));
        }
        Ok(())
    }

    /// Row ranges `[start, end)` of the batches, the last one possibly short.
    pub fn batches(&self, n: usize) -> Vec<(usize, usize)> {
        (0..n.div_ceil(self.batch))
            .map(|k| (k * self.batch, ((k + 1) * self.batch).min(n)))
            .collect()
    }

    /// Row order for `epoch`: identity unless shuffling is enabled.
    pub fn epoch_order(&self, epoch: usize, n: usize) -> Vec<usize> {
        if self.shuffle {
            Rng::derive(self.seed, &format!("epoch/{epoch}")).permutation(n)
        } else {
            (0..n).collect()
        }
    }
}

/// One party's weight shares, one matrix per layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelShares {
    pub layers: Vec<RealMatrix>,
}

impl ModelShares {
    pub fn check_dims(&self, dims: &[usize]) -> Result<()> {
        check_layer_dims(&self.layers, dims)
    }

    /// Sum with the other party's shares.
    pub fn reconstruct(&self, other: &ModelShares) -> Result<Vec<RealMatrix>> {
        if self.layers.len() != other.layers.len() {
            return Err(Error::dim("share sets have different layer counts"));
        }
        self.layers
            .iter()
            .zip(&other.layers)
            .map(|(a, b)| a.add(b))
            .collect()
    }
}

pub(crate) fn check_layer_dims(layers: &[RealMatrix], dims: &[usize]) -> Result<()> {
    if layers.len() + 1 != dims.len() {
        return Err(Error::dim(format!(
            "{} weight matrices for {} layer widths",
            layers.len(),
            dims.len()
        )));
    }
    for (l, w) in layers.iter().enumerate() {
        let want = (dims[l] + 1, dims[l + 1]);
        if w.shape() != want {
            return Err(Error::dim(format!(
                "layer {} weights are {:?}, expected {:?}",
                l + 1,
                w.shape(),
                want
            )));
        }
    }
    Ok(())
}

/// Uniform Xavier weights with a zero bias row.
pub fn init_weights(dims: &[usize], seed: u64) -> Vec<RealMatrix> {
    let mut rng = Rng::derive(seed, "init/weights");
    dims.windows(2)
        .map(|w| {
            let bound = (6.0 / (w[0] + w[1]) as f64).sqrt();
            RealMatrix::from_fn(w[0] + 1, w[1], |i, _| {
                let x = rng.uniform(-bound, bound);
                if i == 0 {
                    0.0
                } else {
                    x
                }
            })
        })
        .collect()
}

/// Splits plaintext weights into Alice's `W - M` and Bob's `M`, with `M`
/// uniform in `[-scale, scale]`.
pub fn share_weights(weights: &[RealMatrix], scale: f64, seed: u64) -> (ModelShares, ModelShares) {
    let mut rng = Rng::derive(seed, "init/shares");
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for w in weights {
        let mask = rng.uniform_matrix(w.rows(), w.cols(), scale);
        a.push(w.sub(&mask).expect("same shape"));
        b.push(mask);
    }
    (ModelShares { layers: a }, ModelShares { layers: b })
}

/// Embeds vertically partitioned features as additive shares of the full
/// feature matrix: Alice holds `[X_a | 0]`, Bob `[0 | X_b]`.
pub fn lift_vertical(xa: &RealMatrix, xb: &RealMatrix) -> Result<(RealMatrix, RealMatrix)> {
    if xa.rows() != xb.rows() {
        return Err(Error::dim(format!(
            "feature halves have {} and {} rows",
            xa.rows(),
            xb.rows()
        )));
    }
    let n = xa.rows();
    Ok((
        xa.hconcat(&RealMatrix::zeros(n, xb.cols()))?,
        RealMatrix::zeros(n, xa.cols()).hconcat(xb)?,
    ))
}

/// Mean cross-entropy of predicted probabilities against one-hot labels.
pub fn cross_entropy(probs: &RealMatrix, onehot: &RealMatrix) -> f64 {
    let n = probs.rows().max(1) as f64;
    let mut total = 0.0;
    for (p, y) in probs.as_slice().iter().zip(onehot.as_slice()) {
        if *y != 0.0 {
            total -= y * p.max(1e-300).ln();
        }
    }
    total / n
}

pub fn accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len() as f64
}

/// Largest entrywise difference between two weight lists.
pub fn weight_divergence(a: &[RealMatrix], b: &[RealMatrix]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.sub(y).map(|d| d.norm_max()).unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max)
}

/// Message count of one forward pass.
pub fn predict_rounds(layers: usize) -> u64 {
    let l = layers as u64;
    12 * l + 8 * (l - 1) + 37
}

/// Message count of one training batch (forward plus backward pass).
pub fn train_batch_rounds(layers: usize) -> u64 {
    let l = layers as u64;
    predict_rounds(layers) + 20 * (l - 1) + 12 * l
}
