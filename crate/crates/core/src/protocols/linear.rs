//! Matrix product, row inner product and hybrid product of share sums.

use crate::encoding::gen_rank_deficient;
use crate::error::{Error, Result};
use crate::matrix::RealMatrix;
use crate::netsim::{PartyId, Phase, Session};
use crate::rng::Rng;

use super::{same_shape, verify_or_abort, MaskBundle, ShareOutcome, SharePair, VerifyMode};

/// Product masks must have rank below the inner dimension. When one side is
/// a single line that already holds, so a plain random mask is used.
fn product_mask(rows: usize, cols: usize, scale: f64, rng: &mut Rng) -> Result<RealMatrix> {
    if rows.min(cols) >= 2 {
        gen_rank_deficient(rows, cols, scale, rng)
    } else {
        Ok(rng.uniform_matrix(rows, cols, scale))
    }
}

/// Shares of `A x B` where `left` holds `A` (`n x s`) and `right` holds `B`
/// (`s x m`). Outcomes are returned as `(left's, right's)`.
pub(crate) fn s2pm_between(
    session: &Session,
    left: PartyId,
    right: PartyId,
    a: &RealMatrix,
    b: &RealMatrix,
) -> Result<(ShareOutcome, ShareOutcome)> {
    if a.cols() != b.rows() {
        return Err(Error::dim(format!(
            "s2pm: {}x{} times {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let (n, s, m) = (a.rows(), a.cols(), b.cols());
    if s < 2 {
        return Err(Error::UnsupportedDimension(format!(
            "s2pm needs an inner dimension >= 2, got {s}"
        )));
    }
    let inst = session.instance("s2pm");
    let sigma = session.cfg().mask_scale;

    session.in_phase(Phase::Preprocess, || -> Result<()> {
        let mut cs = session.rng(&inst, PartyId::Cs);
        let ra = product_mask(n, s, sigma, &mut cs)?;
        let rb = product_mask(s, m, sigma, &mut cs)?;
        let st = ra.matmul(&rb)?;
        let share_a = cs.uniform_matrix(n, m, sigma);
        let share_b = st.sub(&share_a)?;
        let to_left = MaskBundle {
            mask: ra,
            standard_share: share_a,
            standard: st.clone(),
        };
        let to_right = MaskBundle {
            mask: rb,
            standard_share: share_b,
            standard: st,
        };
        session.send(PartyId::Cs, left, inst.tag("masks"), to_left.into_payload())?;
        session.send(
            PartyId::Cs,
            right,
            inst.tag("masks"),
            to_right.into_payload(),
        )
    })?;

    let (left_out, right_out, left_bundle, right_bundle, vf_right_seen, vf_left_seen) = session
        .in_phase(Phase::Online, || -> Result<_> {
            let lb = MaskBundle::from_payload(session.recv_matrices(left, PartyId::Cs, 3)?);
            let rb = MaskBundle::from_payload(session.recv_matrices(right, PartyId::Cs, 3)?);

            let a_hat = a.add(&lb.mask)?;
            session.send(left, right, inst.tag("a_hat"), vec![a_hat])?;
            let b_hat = b.add(&rb.mask)?;
            session.send(right, left, inst.tag("b_hat"), vec![b_hat])?;

            // right
            let a_hat = session.recv_one(right, left)?;
            let mut rng_r = session.rng(&inst, right);
            let v_r = rng_r.uniform_matrix(n, m, sigma);
            let vf_r = v_r.sub(&a_hat.matmul(b)?)?;
            let t = rb.standard_share.sub(&vf_r)?;
            session.send(right, left, inst.tag("vf_b"), vec![vf_r.clone(), t])?;

            // left
            let b_hat = session.recv_one(left, right)?;
            let mut got = session.recv_matrices(left, right, 2)?;
            let t = got.pop().expect("t");
            let vf_r_seen = got.pop().expect("vf");
            let cross = lb.mask.matmul(&b_hat)?;
            let v_l = t.add(&lb.standard_share)?.sub(&cross)?;
            let vf_l = v_l.add(&cross)?;
            session.send(left, right, inst.tag("vf_a"), vec![vf_l.clone()])?;

            let vf_l_seen = session.recv_one(right, left)?;
            Ok((
                ShareOutcome {
                    share: v_l,
                    check: vf_l,
                },
                ShareOutcome {
                    share: v_r,
                    check: vf_r,
                },
                lb,
                rb,
                vf_r_seen,
                vf_l_seen,
            ))
        })?;

    session.in_phase(Phase::Verify, || -> Result<()> {
        let mut rng_l = session.rng(&inst, left).fork("verify");
        verify_or_abort(
            session,
            &inst.label,
            left,
            &left_out,
            &vf_right_seen,
            &left_bundle.standard,
            VerifyMode::MatMul,
            &mut rng_l,
        )?;
        let mut rng_r = session.rng(&inst, right).fork("verify");
        verify_or_abort(
            session,
            &inst.label,
            right,
            &right_out,
            &vf_left_seen,
            &right_bundle.standard,
            VerifyMode::MatMul,
            &mut rng_r,
        )
    })?;
    Ok((left_out, right_out))
}

/// Shares of `A x B` for `A` (`n x s`) held by Alice and `B` (`s x m`) held
/// by Bob. Six messages; requires `s >= 2`.
pub fn s2pm(
    session: &Session,
    a: &RealMatrix,
    b: &RealMatrix,
) -> Result<(ShareOutcome, ShareOutcome)> {
    s2pm_between(session, PartyId::Alice, PartyId::Bob, a, b)
}

/// Shares of the row inner products `sum_j A_ij B_ij` (an `n x 1` column).
/// Six messages.
pub fn s2prip(
    session: &Session,
    a: &RealMatrix,
    b: &RealMatrix,
) -> Result<(ShareOutcome, ShareOutcome)> {
    same_shape("s2prip", a, b)?;
    let (n, m) = a.shape();
    let inst = session.instance("s2prip");
    let sigma = session.cfg().mask_scale;
    let (alice, bob) = (PartyId::Alice, PartyId::Bob);

    session.in_phase(Phase::Preprocess, || -> Result<()> {
        let mut cs = session.rng(&inst, PartyId::Cs);
        let ra = cs.uniform_matrix(n, m, sigma);
        let rb = cs.uniform_matrix(n, m, sigma);
        let st = ra.row_dot(&rb)?;
        let share_a = cs.uniform_matrix(n, 1, sigma);
        let share_b = st.sub(&share_a)?;
        let to_a = MaskBundle {
            mask: ra,
            standard_share: share_a,
            standard: st.clone(),
        };
        let to_b = MaskBundle {
            mask: rb,
            standard_share: share_b,
            standard: st,
        };
        session.send(PartyId::Cs, alice, inst.tag("masks"), to_a.into_payload())?;
        session.send(PartyId::Cs, bob, inst.tag("masks"), to_b.into_payload())
    })?;

    let (a_out, b_out, a_bundle, b_bundle, vf_b_seen, vf_a_seen) =
        session.in_phase(Phase::Online, || -> Result<_> {
            let ab = MaskBundle::from_payload(session.recv_matrices(alice, PartyId::Cs, 3)?);
            let bb = MaskBundle::from_payload(session.recv_matrices(bob, PartyId::Cs, 3)?);

            session.send(alice, bob, inst.tag("a_hat"), vec![a.add(&ab.mask)?])?;
            session.send(bob, alice, inst.tag("b_hat"), vec![b.add(&bb.mask)?])?;

            // Bob
            let a_hat = session.recv_one(bob, alice)?;
            let mut rng_b = session.rng(&inst, bob);
            let v_b = rng_b.uniform_matrix(n, 1, sigma);
            let vf_b = v_b.sub(&a_hat.row_dot(b)?)?;
            let t = bb.standard_share.sub(&vf_b)?;
            session.send(bob, alice, inst.tag("vf_b"), vec![vf_b.clone(), t])?;

            // Alice
            let b_hat = session.recv_one(alice, bob)?;
            let mut got = session.recv_matrices(alice, bob, 2)?;
            let t = got.pop().expect("t");
            let vf_b_seen = got.pop().expect("vf");
            let cross = ab.mask.row_dot(&b_hat)?;
            let v_a = t.add(&ab.standard_share)?.sub(&cross)?;
            let vf_a = v_a.add(&cross)?;
            session.send(alice, bob, inst.tag("vf_a"), vec![vf_a.clone()])?;

            let vf_a_seen = session.recv_one(bob, alice)?;
            Ok((
                ShareOutcome {
                    share: v_a,
                    check: vf_a,
                },
                ShareOutcome {
                    share: v_b,
                    check: vf_b,
                },
                ab,
                bb,
                vf_b_seen,
                vf_a_seen,
            ))
        })?;

    session.in_phase(Phase::Verify, || -> Result<()> {
        let mut rng_a = session.rng(&inst, alice).fork("verify");
        verify_or_abort(
            session,
            &inst.label,
            alice,
            &a_out,
            &vf_b_seen,
            &a_bundle.standard,
            VerifyMode::RowDot,
            &mut rng_a,
        )?;
        let mut rng_b = session.rng(&inst, bob).fork("verify");
        verify_or_abort(
            session,
            &inst.label,
            bob,
            &b_out,
            &vf_a_seen,
            &b_bundle.standard,
            VerifyMode::RowDot,
            &mut rng_b,
        )
    })?;
    Ok((a_out, b_out))
}

/// Shares of `(A1 + B1) x (A2 + B2)` from two masked products; the cross
/// terms `A1 x B2` and `B1 x A2` are computed with Alice and Bob respectively
/// as the left party. Twelve messages.
pub fn s2phm(
    session: &Session,
    alice: (&RealMatrix, &RealMatrix),
    bob: (&RealMatrix, &RealMatrix),
) -> Result<SharePair> {
    let (a1, a2) = alice;
    let (b1, b2) = bob;
    same_shape("s2phm left factors", a1, b1)?;
    same_shape("s2phm right factors", a2, b2)?;
    let (local_a, local_b) = session.in_phase(Phase::Online, || -> Result<_> {
        Ok((a1.matmul(a2)?, b1.matmul(b2)?))
    })?;
    let (x_a, x_b) = s2pm_between(session, PartyId::Alice, PartyId::Bob, a1, b2)?;
    let (y_b, y_a) = s2pm_between(session, PartyId::Bob, PartyId::Alice, b1, a2)?;
    SharePair::new(
        local_a.add(&x_a.share)?.add(&y_a.share)?,
        local_b.add(&x_b.share)?.add(&y_b.share)?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SplitConfig;
    use crate::transform::hsum;

    fn session(seed: u64) -> Session {
        Session::new(SplitConfig::with_seed(seed)).unwrap()
    }

    fn rel_err(got: &RealMatrix, want: &RealMatrix) -> f64 {
        got.sub(want).unwrap().norm_max() / want.norm_max().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn identity_product() {
        let s = session(1);
        let (a, b) = s2pm(&s, &RealMatrix::identity(2), &RealMatrix::identity(2)).unwrap();
        let sum = a.share.add(&b.share).unwrap();
        assert!(rel_err(&sum, &RealMatrix::identity(2)) < 1e-14);
        assert_eq!(s.metrics().rounds, 6);
    }

    #[test]
    fn zero_left_factor() {
        let s = session(2);
        let b = Rng::from_seed(3).uniform_matrix(3, 2, 5.0);
        let (x, y) = s2pm(&s, &RealMatrix::zeros(2, 3), &b).unwrap();
        assert!(x.share.add(&y.share).unwrap().norm_max() < 1e-14);
    }

    #[test]
    fn random_product_and_message_order() {
        let s = session(4);
        let mut r = Rng::from_seed(5);
        let a = r.uniform_matrix(5, 4, 10.0);
        let b = r.uniform_matrix(4, 3, 10.0);
        let (x, y) = s2pm(&s, &a, &b).unwrap();
        assert!(rel_err(&x.share.add(&y.share).unwrap(), &a.matmul(&b).unwrap()) < 1e-12);
        let order: Vec<(PartyId, PartyId, usize)> = s
            .transcript()
            .iter()
            .map(|t| (t.from, t.to, t.shape.len()))
            .collect();
        use PartyId::*;
        assert_eq!(
            order,
            vec![
                (Cs, Alice, 3),
                (Cs, Bob, 3),
                (Alice, Bob, 1),
                (Bob, Alice, 1),
                (Bob, Alice, 2),
                (Alice, Bob, 1)
            ]
        );
        assert_eq!(s.pending(), 0);
    }

    #[test]
    fn inner_dimension_one_is_unsupported() {
        let s = session(6);
        let err = s2pm(&s, &RealMatrix::ones(2, 1), &RealMatrix::ones(1, 2)).unwrap_err();
        assert!(matches!(err, Error::UnsupportedDimension(_)));
        let err = s2pm(&s, &RealMatrix::ones(2, 2), &RealMatrix::ones(3, 2)).unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
    }

    #[test]
    fn row_inner_products() {
        let s = session(7);
        let ones = RealMatrix::ones(2, 2);
        let (x, y) = s2prip(&s, &ones, &ones).unwrap();
        assert!(
            rel_err(
                &x.share.add(&y.share).unwrap(),
                &RealMatrix::column(&[2.0, 2.0])
            ) < 1e-14
        );

        let (x, y) = s2prip(&s, &ones, &RealMatrix::zeros(2, 2)).unwrap();
        assert!(x.share.add(&y.share).unwrap().norm_max() < 1e-14);

        let mut r = Rng::from_seed(8);
        let a = r.uniform_matrix(6, 5, 3.0);
        let b = r.uniform_matrix(6, 5, 3.0);
        let (x, y) = s2prip(&s, &a, &b).unwrap();
        let want = hsum(&a.hadamard(&b).unwrap());
        assert!(rel_err(&x.share.add(&y.share).unwrap(), &want) < 1e-12);
    }

    #[test]
    fn hybrid_product() {
        let s = session(9);
        let mut r = Rng::from_seed(10);
        let a1 = r.uniform_matrix(4, 3, 2.0);
        let a2 = r.uniform_matrix(3, 5, 2.0);
        let z1 = RealMatrix::zeros(4, 3);
        let z2 = RealMatrix::zeros(3, 5);
        let out = s2phm(&s, (&a1, &a2), (&z1, &z2)).unwrap();
        assert!(rel_err(&out.reveal(), &a1.matmul(&a2).unwrap()) < 1e-11);

        let half = RealMatrix::identity(2).scale(0.5);
        let out = s2phm(&s, (&half, &half), (&half, &half)).unwrap();
        assert!(rel_err(&out.reveal(), &RealMatrix::identity(2)) < 1e-12);

        let b1 = r.uniform_matrix(4, 3, 2.0);
        let b2 = r.uniform_matrix(3, 5, 2.0);
        let before = s.metrics().rounds;
        let out = s2phm(&s, (&a1, &a2), (&b1, &b2)).unwrap();
        assert_eq!(s.metrics().rounds - before, 12);
        let want = a1.add(&b1).unwrap().matmul(&a2.add(&b2).unwrap()).unwrap();
        assert!(rel_err(&out.reveal(), &want) < 1e-11);
    }

    #[test]
    fn tampered_check_matrix_is_detected() {
        let s = session(11);
        s.set_tamper(Box::new(|info, payload| {
            if info.tag.ends_with("/vf_a") {
                payload[0][(0, 0)] += 1.0;
            }
        }));
        let mut r = Rng::from_seed(12);
        let a = r.uniform_matrix(3, 3, 1.0);
        let b = r.uniform_matrix(3, 3, 1.0);
        match s2pm(&s, &a, &b) {
            Err(Error::TamperDetected { party, .. }) => assert_eq!(party, PartyId::Bob),
            other => panic!("expected tamper detection, got {other:?}"),
        }
    }

    #[test]
    fn online_messages_are_disguised() {
        let s = session(13);
        let mut r = Rng::from_seed(14);
        let a = r.uniform_matrix(3, 4, 1.0);
        let b = r.uniform_matrix(3, 4, 1.0);
        let seen = std::sync::Arc::new(std::sync::Mutex::new(Vec::new()));
        let sink = seen.clone();
        s.set_tamper(Box::new(move |info, payload| {
            if info.tag.ends_with("/a_hat") {
                sink.lock().unwrap().push(payload[0].clone());
            }
        }));
        s2prip(&s, &a, &b).unwrap();
        let a_hat = &seen.lock().unwrap()[0];
        let diff = a_hat.sub(&a).unwrap();
        assert!(diff.as_slice().iter().all(|d| *d != 0.0));
    }
}
