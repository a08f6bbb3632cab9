//! Small dense linear-algebra helpers shared by the samplers.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};

/// Relative jitter added to the diagonal when a factorization fails.
pub const JITTER_SCALE: f64 = 1e-10;
const MAX_JITTER_ATTEMPTS: usize = 6;

/// Cholesky factor plus a flag telling whether jitter had to be added.
pub struct Factor {
    pub chol: Cholesky<f64, Dyn>,
    pub jittered: bool,
}

/// Cholesky factorization that retries with `1e-10 * trace / q` (growing tenfold
/// per attempt) added to the diagonal when plain factorization fails.
pub fn cholesky_jittered(a: &DMatrix<f64>) -> Result<Factor> {
    if let Some(chol) = Cholesky::new(a.clone()) {
        return Ok(Factor {
            chol,
            jittered: false,
        });
    }
    let q = a.nrows().max(1) as f64;
    let base = (a.trace().abs() / q).max(f64::MIN_POSITIVE);
    let mut eps = JITTER_SCALE * base;
    for _ in 0..MAX_JITTER_ATTEMPTS {
        let mut b = a.clone();
        for i in 0..b.nrows() {
            b[(i, i)] += eps;
        }
        if let Some(chol) = Cholesky::new(b) {
            return Ok(Factor {
                chol,
                jittered: true,
            });
        }
        eps *= 10.0;
    }
    Err(Error::NotSpd(format!("{}x{} matrix", a.nrows(), a.ncols())))
}

pub fn is_symmetric(a: &DMatrix<f64>, tol: f64) -> bool {
    if !a.is_square() {
        return false;
    }
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let scale = a[(i, j)].abs().max(a[(j, i)].abs()).max(1.0);
            if (a[(i, j)] - a[(j, i)]).abs() > tol * scale {
                return false;
            }
        }
    }
    true
}

/// Symmetric (to 1e-9 relative) and Cholesky-factorizable without jitter.
pub fn is_spd(a: &DMatrix<f64>) -> bool {
    a.iter().all(|v| v.is_finite())
        && is_symmetric(a, 1e-9)
        && Cholesky::new(a.clone()).is_some()
}

/// Replace `a` by `(a + a^T) / 2`.
pub fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

/// Inverse of an SPD matrix through its Cholesky factor, symmetrized.
pub fn spd_inverse(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, bool)> {
    let f = cholesky_jittered(a)?;
    let mut inv = f.chol.inverse();
    symmetrize(&mut inv);
    Ok((inv, f.jittered))
}

pub fn log_det_spd(a: &DMatrix<f64>) -> Result<f64> {
    if a.nrows() == 0 {
        return Ok(0.0);
    }
    let chol = Cholesky::new(a.clone())
        .ok_or_else(|| Error::NotSpd("log-determinant".into()))?;
    Ok(2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

/// Principal submatrix on the index list `idx` (in the given order).
pub fn principal(a: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| a[(idx[i], idx[j])])
}

/// Rectangular block with rows `rows` and columns `cols`.
pub fn block(a: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| a[(rows[i], cols[j])])
}
