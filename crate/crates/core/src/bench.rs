//! Protocol micro-benchmarks: seeded inputs over a sweep of exponent ranges,
//! traffic against the analytic cost, and error against a plaintext oracle.

use serde::Serialize;

use crate::config::SplitConfig;
use crate::error::{Error, Result};
use crate::matrix::RealMatrix;
use crate::mlp::s2pg_mlp;
use crate::netsim::Session;
use crate::protocols::{
    cost, s2pdrl, s2phhp, s2phm, s2php, s2pm, s2prip, s2prl, s2pscr, s2psm, Protocol, SharePair,
};
use crate::report::Traffic;
use crate::rng::Rng;
use crate::transform::{dtrans, relu, relu_prime, softmax_rows};

/// Exponent ranges swept when none are given.
pub const DEFAULT_DELTAS: [u32; 5] = [0, 2, 4, 6, 8];

/// How a single-input benchmark value `X` is divided into the two parties'
/// shares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShareSplit {
    /// `A = r ⊙ X` with `r` uniform in `(0, 1)`, `B = X - A`. Both shares
    /// carry the sign of `X`, so `A + B` has no cancellation and the error
    /// measured is the protocol's own.
    SameSign,
    /// `A` uniform in `[-mask_scale, mask_scale]`, `B = X - A`. Absolute
    /// error then scales with `mask_scale`, so relative error grows on
    /// entries much smaller than it.
    Uniform,
}

impl std::str::FromStr for ShareSplit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "same-sign" => Ok(ShareSplit::SameSign),
            "uniform" => Ok(ShareSplit::Uniform),
            _ => Err(Error::usage(format!("unknown share split {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOptions {
    pub protocol: Protocol,
    pub dim: usize,
    pub split: SplitConfig,
    pub deltas: Vec<u32>,
    pub shares: ShareSplit,
}

impl BenchOptions {
    pub fn new(protocol: Protocol, dim: usize, split: SplitConfig) -> Self {
        Self {
            protocol,
            dim,
            split,
            deltas: DEFAULT_DELTAS.to_vec(),
            shares: ShareSplit::SameSign,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifySummary {
    pub accepted: bool,
    /// Challenge rounds per check.
    pub rounds: usize,
    /// Verification checks performed, counting both parties.
    pub checks: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRun {
    pub delta: u32,
    pub traffic: Traffic,
    pub expected_rounds: u64,
    pub expected_bytes: u64,
    /// `max |got - want| / max |want|` over the output.
    pub mre: f64,
    pub verify: VerifySummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub protocol: Protocol,
    /// Shapes of the inputs each party contributes.
    pub dims: Vec<[usize; 2]>,
    pub rho: usize,
    pub verify_rounds: usize,
    pub mask_scale: f64,
    pub seed: u64,
    pub shares: ShareSplit,
    pub runs: Vec<BenchRun>,
}

/// Random matrix with entries `±1.d₁…d₁₅ × 10^e`, `e` uniform in `[-delta, delta]`.
pub fn significand_matrix(rows: usize, cols: usize, delta: u32, rng: &mut Rng) -> RealMatrix {
    let span = 2 * delta as usize + 1;
    RealMatrix::from_fn(rows, cols, |_, _| {
        let digits = rng.below(1_000_000_000_000_000) as f64;
        let e = rng.below(span) as i32 - delta as i32;
        rng.sign() * (1.0 + digits / 1e15) * 10f64.powi(e)
    })
}

/// Normwise relative error; zero when both sides vanish.
pub fn mre(got: &RealMatrix, want: &RealMatrix) -> Result<f64> {
    let num = got.sub(want)?.norm_max();
    let den = want.norm_max();
    Ok(if den == 0.0 { num } else { num / den })
}

pub fn split_shares(
    x: &RealMatrix,
    how: ShareSplit,
    scale: f64,
    rng: &mut Rng,
) -> Result<(RealMatrix, RealMatrix)> {
    let a = match how {
        ShareSplit::SameSign => {
            RealMatrix::from_fn(x.rows(), x.cols(), |i, j| x[(i, j)] * rng.unit())
        }
        ShareSplit::Uniform => rng.uniform_matrix(x.rows(), x.cols(), scale),
    };
    let b = x.sub(&a)?;
    Ok((a, b))
}

pub fn input_dims(protocol: Protocol, dim: usize) -> Vec<[usize; 2]> {
    match protocol {
        Protocol::S2phm | Protocol::S2phhp => vec![[dim, dim]; 2],
        Protocol::S2pg => vec![[dim + 1, dim], [dim, dim], [dim, dim]],
        _ => vec![[dim, dim]],
    }
}

pub fn expected_cost(protocol: Protocol, dim: usize, rho: usize) -> cost::Cost {
    let n = dim;
    match protocol {
        Protocol::S2pm => cost::s2pm(n, n, n),
        Protocol::S2prip => cost::s2prip(n, n),
        Protocol::S2phm => cost::s2phm(n, n, n),
        Protocol::S2php => cost::s2php(n, n, rho),
        Protocol::S2phhp => cost::s2phhp(n, n, rho),
        Protocol::S2pscr => cost::s2pscr(n, n, rho),
        Protocol::S2pdrl => cost::s2pdrl(n, n, rho),
        Protocol::S2prl => cost::s2prl(n, n, rho),
        Protocol::S2psm => cost::s2psm(n, n, rho),
        Protocol::S2pg => cost::s2pg(n, n, n, rho),
    }
}

pub fn run_bench(opts: &BenchOptions) -> Result<BenchReport> {
    opts.split.validate()?;
    let dim = opts.dim;
    if dim == 0 {
        return Err(Error::usage("dim must be >= 1"));
    }
    let needs_inner = matches!(
        opts.protocol,
        Protocol::S2pm | Protocol::S2phm | Protocol::S2pg
    );
    if needs_inner && dim < 2 {
        return Err(Error::usage(format!(
            "{} needs dim >= 2 for rank-deficient masks",
            opts.protocol
        )));
    }
    if opts.deltas.is_empty() {
        return Err(Error::usage("at least one delta is required"));
    }
    let expected = expected_cost(opts.protocol, dim, opts.split.rho);
    let mut runs = Vec::with_capacity(opts.deltas.len());
    for &delta in &opts.deltas {
        let session = Session::new(opts.split)?;
        let mut rng = Rng::derive(opts.split.seed, &format!("bench/{}/{delta}", opts.protocol));
        let mre = run_once(&session, opts.protocol, dim, delta, opts.shares, &mut rng)?;
        let metrics = session.metrics();
        let checks = session
            .transcript()
            .iter()
            .filter(|r| r.tag.ends_with("/vf_a"))
            .count()
            * 2;
        runs.push(BenchRun {
            delta,
            traffic: Traffic::from(&metrics),
            expected_rounds: expected.rounds,
            expected_bytes: expected.bytes(),
            mre,
            verify: VerifySummary {
                accepted: true,
                rounds: opts.split.verify_rounds,
                checks,
            },
        });
    }
    Ok(BenchReport {
        protocol: opts.protocol,
        dims: input_dims(opts.protocol, dim),
        rho: opts.split.rho,
        verify_rounds: opts.split.verify_rounds,
        mask_scale: opts.split.mask_scale,
        seed: opts.split.seed,
        shares: opts.shares,
        runs,
    })
}

/// Runs one instance on fresh inputs and returns its error against the
/// plaintext oracle.
pub fn run_once(
    session: &Session,
    protocol: Protocol,
    dim: usize,
    delta: u32,
    shares: ShareSplit,
    rng: &mut Rng,
) -> Result<f64> {
    let n = dim;
    let sigma = session.cfg().mask_scale;
    let mut sig = |rows, cols| significand_matrix(rows, cols, delta, rng);
    match protocol {
        Protocol::S2pm => {
            let (a, b) = (sig(n, n), sig(n, n));
            let (oa, ob) = s2pm(session, &a, &b)?;
            mre(&oa.share.add(&ob.share)?, &a.matmul(&b)?)
        }
        Protocol::S2prip => {
            let (a, b) = (sig(n, n), sig(n, n));
            let (oa, ob) = s2prip(session, &a, &b)?;
            mre(&oa.share.add(&ob.share)?, &a.row_dot(&b)?)
        }
        Protocol::S2phm => {
            let (a1, a2, b1, b2) = (sig(n, n), sig(n, n), sig(n, n), sig(n, n));
            let got = s2phm(session, (&a1, &a2), (&b1, &b2))?;
            mre(&got.reveal(), &a1.add(&b1)?.matmul(&a2.add(&b2)?)?)
        }
        Protocol::S2php => {
            let (a, b) = (sig(n, n), sig(n, n));
            mre(&s2php(session, &a, &b)?.reveal(), &a.hadamard(&b)?)
        }
        Protocol::S2phhp => {
            let (a1, a2, b1, b2) = (sig(n, n), sig(n, n), sig(n, n), sig(n, n));
            let got = s2phhp(session, (&a1, &a2), (&b1, &b2))?;
            mre(&got.reveal(), &a1.add(&b1)?.hadamard(&a2.add(&b2)?)?)
        }
        Protocol::S2pscr | Protocol::S2pdrl | Protocol::S2prl | Protocol::S2psm => {
            let mut x = sig(n, n);
            if protocol == Protocol::S2psm {
                x = shift_rows_to_zero_max(&x);
            }
            let (a, b) = split_shares(&x, shares, sigma, rng)?;
            let sum = a.add(&b)?;
            let (got, want): (SharePair, RealMatrix) = match protocol {
                Protocol::S2pscr => (s2pscr(session, &a, &b)?, sum.map(f64::recip)),
                Protocol::S2pdrl => (s2pdrl(session, &a, &b)?, relu_prime(&sum)),
                Protocol::S2prl => (s2prl(session, &a, &b)?, relu(&sum)),
                _ => (s2psm(session, &a, &b)?, softmax_rows(&sum)),
            };
            // the derivative is public: both parties hold the same value
            let got = if protocol == Protocol::S2pdrl {
                got.alice
            } else {
                got.reveal()
            };
            mre(&got, &want)
        }
        Protocol::S2pg => {
            let (wa, wb) = (sig(n + 1, n), sig(n + 1, n));
            let (ga, gb) = (sig(n, n), sig(n, n));
            let (pa, pb) = split_shares(&sig(n, n), shares, sigma, rng)?;
            let got = s2pg_mlp(session, (&wa, &wb), (&ga, &gb), (&pa, &pb))?;
            let want = ga
                .add(&gb)?
                .matmul(&dtrans(&wa.add(&wb)?)?)?
                .hadamard(&relu_prime(&pa.add(&pb)?))?;
            mre(&got.reveal(), &want)
        }
    }
}

fn shift_rows_to_zero_max(x: &RealMatrix) -> RealMatrix {
    let maxima: Vec<f64> = (0..x.rows())
        .map(|i| x.row(i).iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    RealMatrix::from_fn(x.rows(), x.cols(), |i, j| x[(i, j)] - maxima[i])
}
