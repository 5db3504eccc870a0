//! Masked two-party protocols over additive real shares.
//!
//! Every protocol runs as a choreography on a [`Session`]: the commodity
//! server distributes masks in the preprocess phase, Alice and Bob exchange
//! disguised matrices online, and both parties then check the verification
//! matrices against the server's standard.

pub mod cost;
pub mod linear;
pub mod nonlinear;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::RealMatrix;
use crate::netsim::{PartyId, Session};
use crate::rng::Rng;

pub use linear::{s2phm, s2pm, s2prip};
pub use nonlinear::{s2pdrl, s2phhp, s2php, s2prl, s2pscr, s2psm};

/// Correlated randomness the commodity server hands to one party.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskBundle {
    /// Added to the party's private input before it is sent.
    pub mask: RealMatrix,
    /// The party's additive share of `standard`.
    pub standard_share: RealMatrix,
    /// Product of both parties' masks; the verification target.
    pub standard: RealMatrix,
}

impl MaskBundle {
    fn into_payload(self) -> Vec<RealMatrix> {
        vec![self.mask, self.standard_share, self.standard]
    }

    fn from_payload(mut p: Vec<RealMatrix>) -> Self {
        debug_assert_eq!(p.len(), 3);
        let standard = p.pop().expect("standard");
        let standard_share = p.pop().expect("standard share");
        let mask = p.pop().expect("mask");
        Self {
            mask,
            standard_share,
            standard,
        }
    }
}

/// One party's output of a verified linear protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct ShareOutcome {
    /// Additive share of the result.
    pub share: RealMatrix,
    /// Verification matrix; both parties' add up to the server's standard.
    pub check: RealMatrix,
}

/// Additive shares of one value, one per data owner.
#[derive(Debug, Clone, PartialEq)]
pub struct SharePair {
    pub alice: RealMatrix,
    pub bob: RealMatrix,
}

impl SharePair {
    pub fn new(alice: RealMatrix, bob: RealMatrix) -> Result<Self> {
        if alice.shape() != bob.shape() {
            return Err(Error::dim(format!(
                "share shapes {:?} and {:?}",
                alice.shape(),
                bob.shape()
            )));
        }
        Ok(Self { alice, bob })
    }

    pub fn of(&self, party: PartyId) -> &RealMatrix {
        match party {
            PartyId::Alice => &self.alice,
            PartyId::Bob => &self.bob,
            other => panic!("{other} holds no share"),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.alice.shape()
    }

    /// Reconstructed value. Only meaningful to a party allowed to see it.
    pub fn reveal(&self) -> RealMatrix {
        self.alice.add(&self.bob).expect("share shapes agree")
    }
}

/// How the verification matrix relates to the random challenge vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyMode {
    /// Deviation `D` is `n x m`; each round checks `D x delta` for a 0/1
    /// vector `delta` of length `m`.
    MatMul,
    /// Deviation `D` is `n x 1`; each round checks `D ⊙ delta` with `delta`
    /// of length `n`.
    RowDot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    /// First failing round, 1-based.
    Reject {
        round: usize,
    },
}

/// Componentwise acceptance bound for a deviation check.
pub fn verify_tolerance(vf_self: &RealMatrix, vf_other: &RealMatrix, standard: &RealMatrix) -> f64 {
    1e-9 * (1.0 + vf_self.norm_max() + vf_other.norm_max() + standard.norm_max())
}

/// Randomized check that `vf_self + vf_other - standard` vanishes, repeated
/// `rounds` times with fresh 0/1 challenge vectors from `rng`.
pub fn verify_shares(
    vf_self: &RealMatrix,
    vf_other: &RealMatrix,
    standard: &RealMatrix,
    rounds: usize,
    mode: VerifyMode,
    rng: &mut Rng,
) -> Result<Verdict> {
    let deviation = vf_self.add(vf_other)?.sub(standard)?;
    let tol = verify_tolerance(vf_self, vf_other, standard);
    let (n, m) = deviation.shape();
    if mode == VerifyMode::RowDot && m != 1 {
        return Err(Error::dim(format!(
            "row-dot verification on a {n}x{m} deviation"
        )));
    }
    for round in 1..=rounds {
        let residual = match mode {
            VerifyMode::MatMul => deviation.matmul(&rng.bit_vector(m))?,
            VerifyMode::RowDot => deviation.hadamard(&rng.bit_vector(n))?,
        };
        if residual.as_slice().iter().any(|e| e.abs() > tol) {
            return Ok(Verdict::Reject { round });
        }
    }
    Ok(Verdict::Accept)
}

/// Runs `party`'s verification and turns a reject into an error.
#[allow(clippy::too_many_arguments)]
pub(crate) fn verify_or_abort(
    session: &Session,
    protocol: &str,
    party: PartyId,
    mine: &ShareOutcome,
    theirs: &RealMatrix,
    standard: &RealMatrix,
    mode: VerifyMode,
    rng: &mut Rng,
) -> Result<()> {
    let rounds = session.cfg().verify_rounds;
    match verify_shares(&mine.check, theirs, standard, rounds, mode, rng)? {
        Verdict::Accept => Ok(()),
        Verdict::Reject { round } => {
            session.close();
            Err(Error::TamperDetected {
                protocol: protocol.to_string(),
                party,
                round,
            })
        }
    }
}

pub(crate) fn same_shape(what: &str, a: &RealMatrix, b: &RealMatrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::dim(format!(
            "{what}: {}x{} vs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(())
}

/// Protocols exposed by the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    S2pm,
    S2prip,
    S2phm,
    S2php,
    S2phhp,
    S2pscr,
    S2pdrl,
    S2prl,
    S2psm,
    S2pg,
}

impl Protocol {
    pub const ALL: [Protocol; 10] = [
        Protocol::S2pm,
        Protocol::S2prip,
        Protocol::S2phm,
        Protocol::S2php,
        Protocol::S2phhp,
        Protocol::S2pscr,
        Protocol::S2pdrl,
        Protocol::S2prl,
        Protocol::S2psm,
        Protocol::S2pg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::S2pm => "s2pm",
            Protocol::S2prip => "s2prip",
            Protocol::S2phm => "s2phm",
            Protocol::S2php => "s2php",
            Protocol::S2phhp => "s2phhp",
            Protocol::S2pscr => "s2pscr",
            Protocol::S2pdrl => "s2pdrl",
            Protocol::S2prl => "s2prl",
            Protocol::S2psm => "s2psm",
            Protocol::S2pg => "s2pg",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::usage(format!("unknown protocol {s:?}")))
    }
}
