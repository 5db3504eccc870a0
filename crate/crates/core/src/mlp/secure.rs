//! Two-party forward pass, backward pass, training and prediction.
//!
//! The simulated runtime keeps both parties' halves of every intermediate in
//! one [`SharePair`]; each party's steps only ever read its own half.

use crate::error::Result;
use crate::matrix::RealMatrix;
use crate::netsim::{Phase, Session};
use crate::protocols::{s2pdrl, s2phm, s2prl, s2psm, SharePair};
use crate::transform::{addcol, dtrans};

use super::{check_layer_dims, init_weights, lift_vertical, share_weights, MlpConfig, ModelShares};

/// Shares of every pre-activation `X^(l)` and every augmented layer input
/// `Z^(l-1)` from one forward pass.
#[derive(Debug, Clone)]
pub struct LayerCache {
    pub pre: Vec<SharePair>,
    pub post: Vec<SharePair>,
}

/// Hybrid product that also accepts an inner dimension of 1 by appending a
/// zero column to the left factors and a zero row to the right ones. The
/// padding leaves the product unchanged.
pub(crate) fn s2phm_any(
    session: &Session,
    alice: (&RealMatrix, &RealMatrix),
    bob: (&RealMatrix, &RealMatrix),
) -> Result<SharePair> {
    if alice.0.cols() >= 2 {
        return s2phm(session, alice, bob);
    }
    let col = |m: &RealMatrix| m.hconcat(&RealMatrix::zeros(m.rows(), 1));
    let row = |m: &RealMatrix| m.vconcat(&RealMatrix::zeros(1, m.cols()));
    let (a1, a2, b1, b2) = (col(alice.0)?, row(alice.1)?, col(bob.0)?, row(bob.1)?);
    s2phm(session, (&a1, &a2), (&b1, &b2))
}

/// Shares of the hidden-layer gradient
/// `(G^(l+1) x dtrans(W^(l+1))) ⊙ relu'(X^(l))`.
pub fn s2pg_mlp(
    session: &Session,
    w_next: (&RealMatrix, &RealMatrix),
    g_next: (&RealMatrix, &RealMatrix),
    pre: (&RealMatrix, &RealMatrix),
) -> Result<SharePair> {
    let (wa, wb) = session.in_phase(Phase::Online, || -> Result<_> {
        Ok((dtrans(w_next.0)?, dtrans(w_next.1)?))
    })?;
    let f = s2pdrl(session, pre.0, pre.1)?;
    let u = s2phm_any(session, (g_next.0, &wa), (g_next.1, &wb))?;
    session.in_phase(Phase::Online, || {
        SharePair::new(f.alice.hadamard(&u.alice)?, f.bob.hadamard(&u.bob)?)
    })
}

/// Forward pass on bias-augmented input shares. Returns the softmax output
/// shares and the cache needed by [`s2pmlp_bp`].
pub fn s2pmlp_fp(
    session: &Session,
    input: &SharePair,
    alice: &ModelShares,
    bob: &ModelShares,
) -> Result<(SharePair, LayerCache)> {
    let layers = alice.layers.len();
    debug_assert_eq!(layers, bob.layers.len());
    let mut z = input.clone();
    let mut cache = LayerCache {
        pre: Vec::with_capacity(layers),
        post: Vec::with_capacity(layers),
    };
    for l in 0..layers {
        debug_assert_eq!(z.shape().1, alice.layers[l].rows());
        let x = s2phm_any(
            session,
            (&z.alice, &alice.layers[l]),
            (&z.bob, &bob.layers[l]),
        )?;
        cache.post.push(z);
        if l + 1 == layers {
            let y = s2psm(session, &x.alice, &x.bob)?;
            cache.pre.push(x);
            return Ok((y, cache));
        }
        let y = s2prl(session, &x.alice, &x.bob)?;
        let (za, zb) = session.in_phase(Phase::Online, || addcol(&y.alice, &y.bob))?;
        cache.pre.push(x);
        z = SharePair::new(za, zb)?;
    }
    unreachable!("loop returns at the output layer")
}

/// Backward pass and in-place weight update. Labels are public; the label
/// term of the output gradient is assigned to Alice.
pub fn s2pmlp_bp(
    session: &Session,
    output: &SharePair,
    labels: &RealMatrix,
    cache: &LayerCache,
    alice: &mut ModelShares,
    bob: &mut ModelShares,
    lr: f64,
) -> Result<()> {
    let layers = alice.layers.len();
    let top = session.in_phase(Phase::Online, || -> Result<SharePair> {
        SharePair::new(output.alice.sub(labels)?, output.bob.clone())
    })?;
    let mut grads = vec![top];
    for l in (0..layers - 1).rev() {
        let upstream = grads.last().expect("nonempty");
        let g = s2pg_mlp(
            session,
            (&alice.layers[l + 1], &bob.layers[l + 1]),
            (&upstream.alice, &upstream.bob),
            (&cache.pre[l].alice, &cache.pre[l].bob),
        )?;
        grads.push(g);
    }
    grads.reverse();
    for l in 0..layers {
        let z = &cache.post[l];
        let (ta, tb) = session.in_phase(Phase::Online, || (z.alice.transpose(), z.bob.transpose()));
        let delta = s2phm_any(session, (&ta, &grads[l].alice), (&tb, &grads[l].bob))?;
        debug_assert_eq!(delta.shape(), alice.layers[l].shape());
        session.in_phase(Phase::Online, || -> Result<()> {
            alice.layers[l] = alice.layers[l].sub(&delta.alice.scale(lr))?;
            bob.layers[l] = bob.layers[l].sub(&delta.bob.scale(lr))?;
            Ok(())
        })?;
    }
    Ok(())
}

/// Softmax output shares for vertically partitioned raw features.
pub fn s2pmlp_predict(
    session: &Session,
    xa: &RealMatrix,
    xb: &RealMatrix,
    alice: &ModelShares,
    bob: &ModelShares,
) -> Result<SharePair> {
    let input = augmented_input(session, xa, xb)?;
    Ok(s2pmlp_fp(session, &input, alice, bob)?.0)
}

fn augmented_input(session: &Session, xa: &RealMatrix, xb: &RealMatrix) -> Result<SharePair> {
    session.in_phase(Phase::Online, || -> Result<SharePair> {
        let (fa, fb) = lift_vertical(xa, xb)?;
        let (za, zb) = addcol(&fa, &fb)?;
        SharePair::new(za, zb)
    })
}

/// Secure trainer holding both parties' weight shares.
#[derive(Debug, Clone)]
pub struct SecureTrainer {
    pub cfg: MlpConfig,
    pub alice: ModelShares,
    pub bob: ModelShares,
}

impl SecureTrainer {
    /// Shares of the same Xavier initialization the plaintext model uses for
    /// `cfg.seed`, masked with `mask_scale`.
    pub fn init(cfg: &MlpConfig, mask_scale: f64) -> Result<Self> {
        cfg.validate()?;
        let weights = init_weights(&cfg.dims, cfg.seed);
        let (alice, bob) = share_weights(&weights, mask_scale, cfg.seed);
        Ok(Self {
            cfg: cfg.clone(),
            alice,
            bob,
        })
    }

    pub fn from_shares(cfg: &MlpConfig, alice: ModelShares, bob: ModelShares) -> Result<Self> {
        check_layer_dims(&alice.layers, &cfg.dims)?;
        check_layer_dims(&bob.layers, &cfg.dims)?;
        Ok(Self {
            cfg: cfg.clone(),
            alice,
            bob,
        })
    }

    /// One forward and backward pass on a batch; returns the output shares.
    pub fn step(
        &mut self,
        session: &Session,
        xa: &RealMatrix,
        xb: &RealMatrix,
        y: &RealMatrix,
    ) -> Result<SharePair> {
        let input = augmented_input(session, xa, xb)?;
        let (out, cache) = s2pmlp_fp(session, &input, &self.alice, &self.bob)?;
        s2pmlp_bp(
            session,
            &out,
            y,
            &cache,
            &mut self.alice,
            &mut self.bob,
            self.cfg.lr,
        )?;
        Ok(out)
    }

    /// Runs every epoch; `on_epoch` sees the trainer after each one.
    pub fn train(
        &mut self,
        session: &Session,
        xa: &RealMatrix,
        xb: &RealMatrix,
        y: &RealMatrix,
        mut on_epoch: impl FnMut(usize, &SecureTrainer),
    ) -> Result<()> {
        if xa.rows() == 0 {
            return Err(crate::error::Error::usage("empty training set"));
        }
        let n = xa.rows();
        for epoch in 0..self.cfg.epochs {
            let order = self.cfg.epoch_order(epoch, n);
            let (xa_e, xb_e, y_e) = (
                xa.select_rows(&order)?,
                xb.select_rows(&order)?,
                y.select_rows(&order)?,
            );
            for (s, e) in self.cfg.batches(n) {
                self.step(
                    session,
                    &xa_e.slice_rows(s, e)?,
                    &xb_e.slice_rows(s, e)?,
                    &y_e.slice_rows(s, e)?,
                )?;
            }
            on_epoch(epoch, self);
        }
        Ok(())
    }

    pub fn reconstruct(&self) -> Result<Vec<RealMatrix>> {
        self.alice.reconstruct(&self.bob)
    }
}
