//! Exact nonlinear operators built from the row inner product protocol.

use crate::encoding::{draw_sign_blind, drl_encode_left, drl_encode_right, ra2t, rb2t};
use crate::error::{Error, Result};
use crate::matrix::RealMatrix;
use crate::netsim::{PartyId, Phase, Session};
use crate::transform::{hcopy, hsum, relu_prime, reshape};

use super::linear::s2prip;
use super::{same_shape, SharePair};

/// Shares of `A ⊙ B`. Each entry pair is encoded so that one row inner
/// product yields its product; six messages.
pub fn s2php(session: &Session, a: &RealMatrix, b: &RealMatrix) -> Result<SharePair> {
    same_shape("s2php", a, b)?;
    let (n, m) = a.shape();
    let rho = session.cfg().rho;
    let inst = session.instance("s2php");
    let (ta, tb) = session.in_phase(Phase::Online, || {
        let ta = ra2t(a, rho, &mut session.rng(&inst, PartyId::Alice));
        let tb = rb2t(b, rho, &mut session.rng(&inst, PartyId::Bob));
        (ta, tb)
    });
    let (ua, ub) = s2prip(session, &ta, &tb)?;
    SharePair::new(reshape(&ua.share, n, m)?, reshape(&ub.share, n, m)?)
}

/// Shares of `(A1 + B1) ⊙ (A2 + B2)`: local products plus two cross terms;
/// twelve messages.
pub fn s2phhp(
    session: &Session,
    alice: (&RealMatrix, &RealMatrix),
    bob: (&RealMatrix, &RealMatrix),
) -> Result<SharePair> {
    let (a1, a2) = alice;
    let (b1, b2) = bob;
    same_shape("s2phhp", a1, a2)?;
    same_shape("s2phhp", a1, b1)?;
    same_shape("s2phhp", a1, b2)?;
    let (local_a, local_b) = session.in_phase(Phase::Online, || -> Result<_> {
        Ok((a1.hadamard(a2)?, b1.hadamard(b2)?))
    })?;
    let x = s2php(session, a1, b2)?;
    // B1 ⊙ A2 with Alice supplying A2
    let y = s2php(session, a2, b1)?;
    SharePair::new(
        local_a.add(&x.alice)?.add(&y.alice)?,
        local_b.add(&x.bob)?.add(&y.bob)?,
    )
}

fn draw_nonzero(
    session: &Session,
    inst: &crate::netsim::Instance,
    party: PartyId,
    n: usize,
    m: usize,
) -> RealMatrix {
    session.rng(inst, party).nonzero_matrix(n, m, 0.5, 2.0)
}

/// Smallest admissible magnitude of a blinded sum in [`s2pscr`].
pub const SINGULAR_FLOOR: f64 = 1e-10;

/// Shares of the elementwise reciprocal `1 / (A + B)`.
///
/// Both sides blind the sum with private nonzero factors `P` (Alice) and `Q`
/// (Bob); Bob learns only `P ⊙ Q ⊙ (A + B)`. Nineteen messages.
pub fn s2pscr(session: &Session, a: &RealMatrix, b: &RealMatrix) -> Result<SharePair> {
    same_shape("s2pscr", a, b)?;
    let (n, m) = a.shape();
    let inst = session.instance("s2pscr");
    let (p, q, ia, ib) = session.in_phase(Phase::Online, || -> Result<_> {
        let p = draw_nonzero(session, &inst, PartyId::Alice, n, m);
        let q = draw_nonzero(session, &inst, PartyId::Bob, n, m);
        let ia = p.hadamard(a)?;
        let ib = q.hadamard(b)?;
        Ok((p, q, ia, ib))
    })?;
    let u1 = s2php(session, &ia, &q)?;
    let u2 = s2php(session, &p, &ib)?;
    let ib_star = session.in_phase(Phase::Online, || -> Result<RealMatrix> {
        let ua = u1.alice.add(&u2.alice)?;
        session.send(PartyId::Alice, PartyId::Bob, inst.tag("u_a"), vec![ua])?;
        let ua = session.recv_one(PartyId::Bob, PartyId::Alice)?;
        let t = ua.add(&u1.bob)?.add(&u2.bob)?;
        let singular = || Error::SingularInput {
            protocol: inst.label.clone(),
        };
        // |P|, |Q| >= 0.5, so an admissible sum (|A + B| >= 1e-9) keeps
        // every blinded entry above this floor.
        if t.as_slice().iter().any(|&x| x.abs() < SINGULAR_FLOOR) {
            return Err(singular());
        }
        let out = RealMatrix::from_fn(n, m, |i, j| q[(i, j)] / t[(i, j)]);
        if !out.is_finite() {
            return Err(singular());
        }
        Ok(out)
    })?;
    s2php(session, &p, &ib_star)
}

/// Public `relu'(A + B)`, held identically by both parties. Only the blinded
/// sum `p q (A + B)` with private `p, q > 0` is exchanged; eight messages.
pub fn s2pdrl(session: &Session, a: &RealMatrix, b: &RealMatrix) -> Result<SharePair> {
    same_shape("s2pdrl", a, b)?;
    let (n, m) = a.shape();
    let rho = session.cfg().rho;
    let inst = session.instance("s2pdrl");
    let (ta, tb) = session.in_phase(Phase::Online, || {
        let mut ra = session.rng(&inst, PartyId::Alice);
        let p = draw_sign_blind(&mut ra);
        let ta = drl_encode_left(a, rho, p, &mut ra);
        let mut rb = session.rng(&inst, PartyId::Bob);
        let q = draw_sign_blind(&mut rb);
        let tb = drl_encode_right(b, rho, q, &mut rb);
        (ta, tb)
    });
    let (ua, ub) = s2prip(session, &ta, &tb)?;
    session.in_phase(Phase::Online, || -> Result<SharePair> {
        let va_hat = reshape(&ua.share, n, m)?;
        let vb_hat = reshape(&ub.share, n, m)?;
        session.send(
            PartyId::Alice,
            PartyId::Bob,
            inst.tag("v_hat_a"),
            vec![va_hat.clone()],
        )?;
        session.send(
            PartyId::Bob,
            PartyId::Alice,
            inst.tag("v_hat_b"),
            vec![vb_hat.clone()],
        )?;
        let from_bob = session.recv_one(PartyId::Alice, PartyId::Bob)?;
        let from_alice = session.recv_one(PartyId::Bob, PartyId::Alice)?;
        let at_alice = relu_prime(&va_hat.add(&from_bob)?);
        let at_bob = relu_prime(&from_alice.add(&vb_hat)?);
        SharePair::new(at_alice, at_bob)
    })
}

/// Shares of `relu(A + B)`: each party masks its own input with the public
/// derivative. Eight messages.
pub fn s2prl(session: &Session, a: &RealMatrix, b: &RealMatrix) -> Result<SharePair> {
    let d = s2pdrl(session, a, b)?;
    session.in_phase(Phase::Online, || {
        SharePair::new(d.alice.hadamard(a)?, d.bob.hadamard(b)?)
    })
}

/// Shares of the row-wise softmax of `A + B`.
///
/// Local exponentials of the shares are multiplied securely, the row sums
/// inverted with [`s2pscr`] and broadcast back across each row. Each party
/// first subtracts its own row maxima, which leaves the softmax unchanged and
/// keeps every local exponential in `(0, 1]` however large the shares grow.
/// Fails with a range error on non-finite shares. Thirty-seven messages.
pub fn s2psm(session: &Session, a: &RealMatrix, b: &RealMatrix) -> Result<SharePair> {
    same_shape("s2psm", a, b)?;
    let m = a.cols();
    let inst = session.instance("s2psm");
    let (ia, ib) = session.in_phase(Phase::Online, || (exp_shifted(a), exp_shifted(b)));
    if !ia.is_finite() || !ib.is_finite() {
        return Err(Error::Range {
            protocol: inst.label.clone(),
        });
    }
    let u1 = s2php(session, &ia, &ib)?;
    let (sa, sb) = session.in_phase(Phase::Online, || (hsum(&u1.alice), hsum(&u1.bob)));
    let u3 = s2pscr(session, &sa, &sb)?;
    let (ca, cb) = session.in_phase(Phase::Online, || -> Result<_> {
        Ok((hcopy(&u3.alice, m)?, hcopy(&u3.bob, m)?))
    })?;
    s2phhp(session, (&u1.alice, &ca), (&u1.bob, &cb))
}

/// `exp(x - max(row))` per row.
fn exp_shifted(x: &RealMatrix) -> RealMatrix {
    let maxima: Vec<f64> = (0..x.rows())
        .map(|i| x.row(i).iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    RealMatrix::from_fn(x.rows(), x.cols(), |i, j| (x[(i, j)] - maxima[i]).exp())
}
