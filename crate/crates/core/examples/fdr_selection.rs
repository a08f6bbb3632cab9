//! Select nonzero entries from a matrix of posterior inclusion frequencies
//! at several false discovery targets.
//!
//! ```text
//! cargo run --example fdr_selection
//! ```

use lrsd::posterior::fdr_select;
use nalgebra::DMatrix;

fn main() -> lrsd::Result<()> {
    let q = 5;
    // strong pairs near one, a few doubtful ones, the rest near zero
    let mut freq = DMatrix::from_element(q, q, 0.02);
    for (i, j, p) in [(0, 1, 0.99), (1, 2, 0.97), (3, 4, 0.9), (0, 4, 0.6), (2, 3, 0.45), (1, 4, 0.3)] {
        freq[(i, j)] = p;
        freq[(j, i)] = p;
    }
    for target in [0.01, 0.05, 0.1, 0.2, 0.4] {
        let selected = fdr_select(&freq, target)?;
        // expected false discoveries among the selected set
        let fd: f64 = selected.iter().map(|&(i, j)| 1.0 - freq[(i, j)]).sum();
        let rate = if selected.is_empty() { 0.0 } else { fd / selected.len() as f64 };
        println!("target {target:>4}: {} pairs, estimated FDR {rate:.3}, {:?}", selected.len(), selected);
    }
    Ok(())
}
