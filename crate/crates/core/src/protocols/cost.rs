//! Closed-form message and element counts for each protocol.
//!
//! Elements are 64-bit reals, so bytes on the wire are `8 * elements`.

use std::ops::{Add, Mul};

use serde::{Deserialize, Serialize};

use crate::netsim::ELEMENT_BYTES;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cost {
    pub rounds: u64,
    pub elements: u64,
}

impl Cost {
    pub const fn new(rounds: u64, elements: u64) -> Self {
        Self { rounds, elements }
    }

    pub fn bytes(&self) -> u64 {
        self.elements * ELEMENT_BYTES
    }
}

impl Add for Cost {
    type Output = Cost;

    fn add(self, o: Cost) -> Cost {
        Cost::new(self.rounds + o.rounds, self.elements + o.elements)
    }
}

impl Mul<u64> for Cost {
    type Output = Cost;

    fn mul(self, k: u64) -> Cost {
        Cost::new(self.rounds * k, self.elements * k)
    }
}

fn u(x: usize) -> u64 {
    x as u64
}

/// `n x s` times `s x m`.
pub fn s2pm(n: usize, s: usize, m: usize) -> Cost {
    let (n, s, m) = (u(n), u(s), u(m));
    // masks + standard share + standard to each side, two disguised inputs,
    // (check, t) and the final check
    Cost::new(6, 2 * n * s + 2 * s * m + 7 * n * m)
}

pub fn s2prip(n: usize, m: usize) -> Cost {
    let (n, m) = (u(n), u(m));
    Cost::new(6, 4 * n * m + 7 * n)
}

pub fn s2phm(n: usize, s: usize, m: usize) -> Cost {
    s2pm(n, s, m) * 2
}

pub fn s2php(n: usize, m: usize, rho: usize) -> Cost {
    s2prip(n * m, rho * rho)
}

pub fn s2phhp(n: usize, m: usize, rho: usize) -> Cost {
    s2php(n, m, rho) * 2
}

pub fn s2pscr(n: usize, m: usize, rho: usize) -> Cost {
    s2php(n, m, rho) * 3 + Cost::new(1, u(n * m))
}

pub fn s2pdrl(n: usize, m: usize, rho: usize) -> Cost {
    s2prip(n * m, 2 * rho) + Cost::new(2, 2 * u(n * m))
}

pub fn s2prl(n: usize, m: usize, rho: usize) -> Cost {
    s2pdrl(n, m, rho)
}

pub fn s2psm(n: usize, m: usize, rho: usize) -> Cost {
    s2php(n, m, rho) + s2pscr(n, 1, rho) + s2phhp(n, m, rho)
}

/// Gradient of a hidden layer of width `width` with `next` units above it.
pub fn s2pg(n: usize, width: usize, next: usize, rho: usize) -> Cost {
    s2pdrl(n, width, rho) + s2phm(n, next, width)
}
