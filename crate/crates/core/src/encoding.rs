//! Scalar splitting and the row encodings that turn elementwise products and
//! sign tests into row inner products.

use crate::error::{Error, Result};
use crate::matrix::RealMatrix;
use crate::rng::Rng;

/// Spacing of the f64 grid at `|x|`.
fn ulp_of(x: f64) -> f64 {
    let biased = ((x.abs().to_bits() >> 52) & 0x7ff) as i32;
    // exponent of the last significand bit
    let e = biased.max(1) - 1075;
    if e >= -1022 {
        f64::from_bits(((e + 1023) as u64) << 52)
    } else {
        f64::from_bits(1u64 << (e + 1074))
    }
}

/// Splits `x` into `rho` addends that all carry the sign of `x`.
///
/// Every addend is a multiple of `ulp(x)` no larger than `|x|`, so all
/// partial sums are exact and the addends sum to `x` with zero error.
pub fn split_same_sign(x: f64, rho: usize, rng: &mut Rng) -> Vec<f64> {
    assert!(rho >= 2, "rho must be >= 2");
    if x == 0.0 {
        return vec![0.0; rho];
    }
    let mag = x.abs();
    let grid = ulp_of(mag);
    let sign = x.signum();
    for _ in 0..64 {
        let weights: Vec<f64> = (0..rho).map(|_| rng.exponential()).collect();
        let total: f64 = weights.iter().sum();
        let mut parts = Vec::with_capacity(rho);
        let mut used = 0.0;
        for w in &weights[..rho - 1] {
            let p = (mag * (w / total) / grid).round() * grid;
            used += p;
            parts.push(p);
        }
        let last = mag - used;
        parts.push(last);
        if parts.iter().all(|&p| p > 0.0) {
            return parts.into_iter().map(|p| sign * p).collect();
        }
    }
    // Only reachable for subnormal x with fewer than rho grid points.
    let mut parts = vec![0.0; rho];
    parts[0] = x;
    parts
}

/// One row of the left Hadamard encoding: the split repeated `rho` times.
pub fn ra2t_row(split: &[f64]) -> Vec<f64> {
    let rho = split.len();
    let mut row = Vec::with_capacity(rho * rho);
    for _ in 0..rho {
        row.extend_from_slice(split);
    }
    row
}

/// One row of the right Hadamard encoding: the cyclic rotations of `split`
/// listed in `order`. `order` must be a permutation of `0..rho`.
pub fn rb2t_row(split: &[f64], order: &[usize]) -> Vec<f64> {
    let rho = split.len();
    debug_assert_eq!(order.len(), rho);
    let mut row = Vec::with_capacity(rho * rho);
    for &shift in order {
        row.extend((0..rho).map(|j| split[(j + shift) % rho]));
    }
    row
}

/// Left Hadamard encoding (`nm x rho^2`), one row per row-major entry of `a`.
pub fn ra2t(a: &RealMatrix, rho: usize, rng: &mut Rng) -> RealMatrix {
    let mut data = Vec::with_capacity(a.len() * rho * rho);
    for &x in a.as_slice() {
        data.extend(ra2t_row(&split_same_sign(x, rho, rng)));
    }
    RealMatrix::from_raw(a.len(), rho * rho, data)
}

/// Right Hadamard encoding (`nm x rho^2`). Row `i` dotted with row `i` of any
/// left encoding of `a` gives `a_i * b_i`, because the rotations pair every
/// split index of one side with every split index of the other exactly once.
pub fn rb2t(b: &RealMatrix, rho: usize, rng: &mut Rng) -> RealMatrix {
    let mut data = Vec::with_capacity(b.len() * rho * rho);
    for &x in b.as_slice() {
        let split = split_same_sign(x, rho, rng);
        let order = rng.permutation(rho);
        data.extend(rb2t_row(&split, &order));
    }
    RealMatrix::from_raw(b.len(), rho * rho, data)
}

/// Draws the positive blinding factor used by the sign encodings.
pub fn draw_sign_blind(rng: &mut Rng) -> f64 {
    rng.uniform(0.5, 2.0)
}

/// Alice's side of the sign encoding: rows `p * (a1, 1, a2, 1, ...)`.
pub fn drl_encode_left(a: &RealMatrix, rho: usize, p: f64, rng: &mut Rng) -> RealMatrix {
    let mut data = Vec::with_capacity(a.len() * 2 * rho);
    for &x in a.as_slice() {
        for part in split_same_sign(x, rho, rng) {
            data.push(p * part);
            data.push(p);
        }
    }
    RealMatrix::from_raw(a.len(), 2 * rho, data)
}

/// Bob's side of the sign encoding: rows `q * (1, b1, 1, b2, ...)`.
pub fn drl_encode_right(b: &RealMatrix, rho: usize, q: f64, rng: &mut Rng) -> RealMatrix {
    let mut data = Vec::with_capacity(b.len() * 2 * rho);
    for &x in b.as_slice() {
        for part in split_same_sign(x, rho, rng) {
            data.push(q);
            data.push(q * part);
        }
    }
    RealMatrix::from_raw(b.len(), 2 * rho, data)
}

/// Both sides of the sign encoding from one stream. Row `i` of the left
/// encoding dotted with row `i` of the right one equals `p q (a_i + b_i)`.
pub fn drl_encode(
    a: &RealMatrix,
    b: &RealMatrix,
    rho: usize,
    rng: &mut Rng,
) -> Result<(RealMatrix, RealMatrix, f64, f64)> {
    if a.shape() != b.shape() {
        return Err(Error::dim(format!(
            "drl_encode: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let p = draw_sign_blind(rng);
    let q = draw_sign_blind(rng);
    let ta = drl_encode_left(a, rho, p, rng);
    let tb = drl_encode_right(b, rho, q, rng);
    Ok((ta, tb, p, q))
}

/// Random `rows x cols` matrix with entries in `[-scale, scale]` and rank
/// exactly `min(rows, cols) - 1`.
///
/// The last of `min - 1` random lines (rows when `rows <= cols`, columns
/// otherwise) is replaced by a combination with coefficient 1-norm below 1,
/// then rows and columns are shuffled.
pub fn gen_rank_deficient(
    rows: usize,
    cols: usize,
    scale: f64,
    rng: &mut Rng,
) -> Result<RealMatrix> {
    let k = rows.min(cols);
    if k < 2 {
        return Err(Error::UnsupportedDimension(format!(
            "rank-deficient mask needs min(rows, cols) >= 2, got {rows}x{cols}"
        )));
    }
    let (lines, width) = if rows <= cols {
        (rows, cols)
    } else {
        (cols, rows)
    };
    let mut m = rng.uniform_matrix(lines, width, scale);
    let mut coef: Vec<f64> = (0..k - 1).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let norm: f64 = coef.iter().map(|c| c.abs()).sum();
    for c in &mut coef {
        *c /= norm.max(1.0);
    }
    // Lines beyond k - 1 would only exist when lines > k, which is excluded
    // by picking the shorter side.
    for j in 0..width {
        let v: f64 = (0..k - 1).map(|i| coef[i] * m[(i, j)]).sum();
        m[(k - 1, j)] = v;
    }
    let pr = rng.permutation(lines);
    let pc = rng.permutation(width);
    let shuffled = RealMatrix::from_fn(lines, width, |i, j| m[(pr[i], pc[j])]);
    Ok(if rows <= cols {
        shuffled
    } else {
        shuffled.transpose()
    })
}
