//! Local reshaping transforms used between protocol steps.

use crate::error::{Error, Result};
use crate::matrix::RealMatrix;

/// Row-major flattening into an `nm x 1` column.
pub fn m2v(m: &RealMatrix) -> RealMatrix {
    RealMatrix::from_raw(m.len(), 1, m.as_slice().to_vec())
}

/// Row-major inverse of [`m2v`].
pub fn reshape(v: &RealMatrix, rows: usize, cols: usize) -> Result<RealMatrix> {
    if rows == 0 || cols == 0 || v.len() != rows * cols {
        return Err(Error::dim(format!(
            "reshape of {} entries into {rows}x{cols}",
            v.len()
        )));
    }
    Ok(RealMatrix::from_raw(rows, cols, v.as_slice().to_vec()))
}

/// Places the diagonal of a square `nm x nm` matrix into an `n x m` matrix in
/// row-major order.
pub fn diag_to_matrix(u: &RealMatrix, rows: usize, cols: usize) -> Result<RealMatrix> {
    if u.rows() != u.cols() || u.rows() != rows * cols {
        return Err(Error::dim(format!(
            "diag_to_matrix: {}x{} source for a {rows}x{cols} target",
            u.rows(),
            u.cols()
        )));
    }
    Ok(RealMatrix::from_fn(rows, cols, |i, j| {
        let k = i * cols + j;
        u[(k, k)]
    }))
}

/// Adds the bias column to a pair of additive shares: ones for Alice, zeros
/// for Bob, so the reconstructed matrix is `[1 | Xa + Xb]`.
pub fn addcol(xa: &RealMatrix, xb: &RealMatrix) -> Result<(RealMatrix, RealMatrix)> {
    if xa.shape() != xb.shape() {
        return Err(Error::dim(format!(
            "addcol: {:?} vs {:?}",
            xa.shape(),
            xb.shape()
        )));
    }
    let n = xa.rows();
    Ok((
        RealMatrix::ones(n, 1).hconcat(xa)?,
        RealMatrix::zeros(n, 1).hconcat(xb)?,
    ))
}

/// Drops the bias row of a `(d+1) x e` weight matrix and transposes the rest.
pub fn dtrans(w: &RealMatrix) -> Result<RealMatrix> {
    if w.rows() < 2 {
        return Err(Error::dim(format!(
            "dtrans needs at least 2 rows, got {}",
            w.rows()
        )));
    }
    Ok(RealMatrix::from_fn(w.cols(), w.rows() - 1, |i, j| {
        w[(j + 1, i)]
    }))
}

/// Row sums as an `n x 1` column.
pub fn hsum(m: &RealMatrix) -> RealMatrix {
    RealMatrix::from_fn(m.rows(), 1, |i, _| m.row(i).iter().sum())
}

/// Repeats a column `copies` times side by side.
pub fn hcopy(v: &RealMatrix, copies: usize) -> Result<RealMatrix> {
    if v.cols() != 1 || copies == 0 {
        return Err(Error::dim(format!(
            "hcopy of a {}x{} matrix into {copies} columns",
            v.rows(),
            v.cols()
        )));
    }
    Ok(RealMatrix::from_fn(v.rows(), copies, |i, _| v[(i, 0)]))
}

pub fn relu(m: &RealMatrix) -> RealMatrix {
    m.map(|x| if x > 0.0 { x } else { 0.0 })
}

/// Derivative of ReLU with `relu'(0) = 0`.
pub fn relu_prime(m: &RealMatrix) -> RealMatrix {
    m.map(|x| if x > 0.0 { 1.0 } else { 0.0 })
}

/// Row-wise softmax, shifted by the row maximum.
pub fn softmax_rows(m: &RealMatrix) -> RealMatrix {
    let mut out = m.clone();
    let cols = m.cols();
    for row in out.as_mut_slice().chunks_mut(cols) {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for x in row.iter_mut() {
            *x = (*x - max).exp();
            total += *x;
        }
        for x in row.iter_mut() {
            *x /= total;
        }
    }
    out
}
