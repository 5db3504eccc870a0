//! Instance generation and plaintext oracles shared by the integration
//! suites.
#![allow(dead_code)]

use s2pmlp::bench::{mre, significand_matrix, split_shares, ShareSplit};
use s2pmlp::mlp::s2pg_mlp;
use s2pmlp::protocols::{
    s2pdrl, s2phhp, s2phm, s2php, s2pm, s2prip, s2prl, s2pscr, s2psm, Protocol,
};
use s2pmlp::transform::{dtrans, relu, relu_prime, softmax_rows};
use s2pmlp::{RealMatrix, Result, Rng, Session, SplitConfig};

/// Output shape `rows x cols`; `inner` is the contracted dimension of the
/// product protocols and the upstream width of the gradient.
#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub rows: usize,
    pub cols: usize,
    pub inner: usize,
}

/// Reconstructed protocol output and the plaintext oracle, for every
/// party-visible value the protocol produces.
pub struct Outcome {
    pub got: Vec<RealMatrix>,
    pub want: RealMatrix,
}

impl Outcome {
    pub fn error(&self) -> f64 {
        self.got
            .iter()
            .map(|g| mre(g, &self.want).unwrap())
            .fold(0.0, f64::max)
    }
}

pub fn session(seed: u64) -> Session {
    Session::new(SplitConfig::with_seed(seed)).unwrap()
}

/// Runs `protocol` once on fresh inputs with entries `±1.d × 10^e`,
/// `|e| <= delta`. Single-input protocols see uniform-masked shares of one
/// such matrix.
pub fn run_case(
    session: &Session,
    protocol: Protocol,
    shape: Shape,
    delta: u32,
    rng: &mut Rng,
) -> Result<Outcome> {
    let Shape {
        rows: n,
        cols: m,
        inner: s,
    } = shape;
    let sigma = session.cfg().mask_scale;
    let mut sig = |r, c| significand_matrix(r, c, delta, rng);
    let pair =
        |x: &RealMatrix, rng: &mut Rng| split_shares(x, ShareSplit::Uniform, sigma, rng).unwrap();
    Ok(match protocol {
        Protocol::S2pm => {
            let (a, b) = (sig(n, s), sig(s, m));
            let (oa, ob) = s2pm(session, &a, &b)?;
            Outcome {
                got: vec![oa.share.add(&ob.share)?],
                want: a.matmul(&b)?,
            }
        }
        Protocol::S2prip => {
            let (a, b) = (sig(n, m), sig(n, m));
            let (oa, ob) = s2prip(session, &a, &b)?;
            Outcome {
                got: vec![oa.share.add(&ob.share)?],
                want: a.row_dot(&b)?,
            }
        }
        Protocol::S2phm => {
            let (a1, b1, a2, b2) = (sig(n, s), sig(n, s), sig(s, m), sig(s, m));
            Outcome {
                got: vec![s2phm(session, (&a1, &a2), (&b1, &b2))?.reveal()],
                want: a1.add(&b1)?.matmul(&a2.add(&b2)?)?,
            }
        }
        Protocol::S2php => {
            let (a, b) = (sig(n, m), sig(n, m));
            Outcome {
                got: vec![s2php(session, &a, &b)?.reveal()],
                want: a.hadamard(&b)?,
            }
        }
        Protocol::S2phhp => {
            let (a1, a2, b1, b2) = (sig(n, m), sig(n, m), sig(n, m), sig(n, m));
            Outcome {
                got: vec![s2phhp(session, (&a1, &a2), (&b1, &b2))?.reveal()],
                want: a1.add(&b1)?.hadamard(&a2.add(&b2)?)?,
            }
        }
        Protocol::S2pscr | Protocol::S2pdrl | Protocol::S2prl | Protocol::S2psm => {
            let x = sig(n, m);
            let (a, b) = pair(&x, rng);
            let sum = a.add(&b)?;
            match protocol {
                Protocol::S2pscr => Outcome {
                    got: vec![s2pscr(session, &a, &b)?.reveal()],
                    want: sum.map(f64::recip),
                },
                Protocol::S2pdrl => {
                    let d = s2pdrl(session, &a, &b)?;
                    Outcome {
                        got: vec![d.alice, d.bob],
                        want: relu_prime(&sum),
                    }
                }
                Protocol::S2prl => Outcome {
                    got: vec![s2prl(session, &a, &b)?.reveal()],
                    want: relu(&sum),
                },
                _ => Outcome {
                    got: vec![s2psm(session, &a, &b)?.reveal()],
                    want: softmax_rows(&sum),
                },
            }
        }
        Protocol::S2pg => {
            let (wa, wb) = (sig(m + 1, s), sig(m + 1, s));
            let (ga, gb) = (sig(n, s), sig(n, s));
            let x = sig(n, m);
            let (pa, pb) = pair(&x, rng);
            let got = s2pg_mlp(session, (&wa, &wb), (&ga, &gb), (&pa, &pb))?;
            Outcome {
                got: vec![got.reveal()],
                want: ga
                    .add(&gb)?
                    .matmul(&dtrans(&wa.add(&wb)?)?)?
                    .hadamard(&relu_prime(&pa.add(&pb)?))?,
            }
        }
    })
}

/// Whether the protocol runs a masked product whose inner dimension must be
/// at least 2.
pub fn needs_inner(protocol: Protocol) -> bool {
    matches!(protocol, Protocol::S2pm | Protocol::S2phm)
}

/// Random shape in one of the classes `1x1`, `1xm`, `nx1`, `nxm` with free
/// sides drawn from `[2, max]`.
pub fn shape_in_class(class: usize, max: usize, protocol: Protocol, rng: &mut Rng) -> Shape {
    let mut side = || 2 + rng.below(max - 1);
    let (rows, cols) = match class {
        0 => (1, 1),
        1 => (1, side()),
        2 => (side(), 1),
        _ => (side(), side()),
    };
    let inner = if needs_inner(protocol) || protocol == Protocol::S2pg {
        side()
    } else {
        0
    };
    Shape { rows, cols, inner }
}

pub const SHAPE_CLASSES: [&str; 4] = ["1x1", "1xm", "nx1", "nxm"];
