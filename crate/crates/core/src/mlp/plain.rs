//! Centralized reference network.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::matrix::RealMatrix;
use crate::transform::{dtrans, relu, relu_prime, softmax_rows};

use super::{check_layer_dims, cross_entropy, init_weights, MlpConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlainModel {
    pub layers: Vec<RealMatrix>,
}

/// Intermediates of one forward pass.
#[derive(Debug, Clone)]
pub struct PlainTrace {
    /// Pre-activations `X^(1..=L)`.
    pub pre: Vec<RealMatrix>,
    /// Bias-augmented inputs `Z^(0..L)`.
    pub post: Vec<RealMatrix>,
    pub output: RealMatrix,
}

fn augment(x: &RealMatrix) -> Result<RealMatrix> {
    RealMatrix::ones(x.rows(), 1).hconcat(x)
}

impl PlainModel {
    pub fn new(layers: Vec<RealMatrix>, dims: &[usize]) -> Result<Self> {
        check_layer_dims(&layers, dims)?;
        Ok(Self { layers })
    }

    pub fn init(cfg: &MlpConfig) -> Self {
        Self {
            layers: init_weights(&cfg.dims, cfg.seed),
        }
    }

    pub fn forward(&self, x: &RealMatrix) -> Result<PlainTrace> {
        let mut z = augment(x)?;
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post = Vec::with_capacity(self.layers.len());
        let last = self.layers.len() - 1;
        let mut output = None;
        for (l, w) in self.layers.iter().enumerate() {
            let xl = z.matmul(w)?;
            post.push(z);
            if l == last {
                output = Some(softmax_rows(&xl));
                z = RealMatrix::zeros(1, 1);
            } else {
                z = augment(&relu(&xl))?;
            }
            pre.push(xl);
        }
        Ok(PlainTrace {
            pre,
            post,
            output: output.expect("at least one layer"),
        })
    }

    pub fn predict_proba(&self, x: &RealMatrix) -> Result<RealMatrix> {
        Ok(self.forward(x)?.output)
    }

    pub fn predict(&self, x: &RealMatrix) -> Result<Vec<usize>> {
        Ok(self.predict_proba(x)?.argmax_rows())
    }

    /// Per-layer gradients `G^(l)` for a forward trace.
    pub fn layer_gradients(&self, trace: &PlainTrace, y: &RealMatrix) -> Result<Vec<RealMatrix>> {
        let l_count = self.layers.len();
        let mut grads = vec![trace.output.sub(y)?];
        for l in (0..l_count - 1).rev() {
            let upstream = grads.last().expect("nonempty");
            let g = upstream
                .matmul(&dtrans(&self.layers[l + 1])?)?
                .hadamard(&relu_prime(&trace.pre[l]))?;
            grads.push(g);
        }
        grads.reverse();
        Ok(grads)
    }

    /// Weight gradients `Z^(l-1)^T G^(l)`, summed over the batch.
    pub fn weight_gradients(&self, x: &RealMatrix, y: &RealMatrix) -> Result<Vec<RealMatrix>> {
        let trace = self.forward(x)?;
        let grads = self.layer_gradients(&trace, y)?;
        trace
            .post
            .iter()
            .zip(&grads)
            .map(|(z, g)| z.transpose().matmul(g))
            .collect()
    }

    /// One gradient-descent step on a batch.
    pub fn step(&mut self, x: &RealMatrix, y: &RealMatrix, lr: f64) -> Result<()> {
        let deltas = self.weight_gradients(x, y)?;
        for (w, d) in self.layers.iter_mut().zip(&deltas) {
            *w = w.sub(&d.scale(lr))?;
        }
        Ok(())
    }

    /// Summed cross-entropy; its gradient with respect to the weights is what
    /// [`PlainModel::weight_gradients`] returns.
    pub fn loss_sum(&self, x: &RealMatrix, y: &RealMatrix) -> Result<f64> {
        Ok(cross_entropy(&self.predict_proba(x)?, y) * x.rows() as f64)
    }

    /// Runs `cfg.epochs` epochs of sequential mini-batches, calling `on_epoch`
    /// after each.
    pub fn train(
        &mut self,
        cfg: &MlpConfig,
        x: &RealMatrix,
        y: &RealMatrix,
        mut on_epoch: impl FnMut(usize, &PlainModel),
    ) -> Result<()> {
        for epoch in 0..cfg.epochs {
            let order = cfg.epoch_order(epoch, x.rows());
            let (xe, ye) = (x.select_rows(&order)?, y.select_rows(&order)?);
            for (s, e) in cfg.batches(x.rows()) {
                self.step(&xe.slice_rows(s, e)?, &ye.slice_rows(s, e)?, cfg.lr)?;
            }
            on_epoch(epoch, self);
        }
        Ok(())
    }
}
