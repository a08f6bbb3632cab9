//! Estimation losses and support-recovery counts.

use std::collections::BTreeSet;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Unordered off-diagonal pairs, stored as `(i, j)` with `i < j`.
pub type Support = BTreeSet<(usize, usize)>;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Losses {
    /// Entrywise L1 norm of the error.
    pub l1: f64,
    /// Frobenius norm of the error.
    pub frobenius: f64,
}

pub fn matrix_losses(estimate: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<Losses> {
    if estimate.shape() != truth.shape() {
        return Err(Error::Dimension(format!(
            "estimate is {:?}, truth is {:?}",
            estimate.shape(),
            truth.shape()
        )));
    }
    let diff = estimate - truth;
    Ok(Losses {
        l1: diff.iter().map(|v| v.abs()).sum(),
        frobenius: diff.norm(),
    })
}

/// Strict-upper pairs with a nonzero entry.
pub fn support_from_matrix(m: &DMatrix<f64>) -> Support {
    let q = m.nrows();
    let mut out = Support::new();
    for i in 0..q {
        for j in (i + 1)..q {
            if m[(i, j)] != 0.0 {
                out.insert((i, j));
            }
        }
    }
    out
}

fn canonical(set: &Support) -> Support {
    set.iter()
        .filter(|(i, j)| i != j)
        .map(|&(i, j)| if i < j { (i, j) } else { (j, i) })
        .collect()
}

/// `(false positives, false negatives)` of an estimated support. Diagonal
/// entries are ignored and pairs are treated as unordered.
pub fn support_metrics(estimated: &Support, truth: &Support) -> (usize, usize) {
    let e = canonical(estimated);
    let t = canonical(truth);
    let fp = e.difference(&t).count();
    let fn_ = t.difference(&e).count();
    (fp, fn_)
}
