//! Generate one data set from each simulation model and print the size of
//! the true structure next to the sample covariance error.
//!
//! ```text
//! cargo run --release --example simulate_models -- [seed]
//! ```

use lrsd::model::{matrix_losses, simulate, SimulationSpec};

fn main() -> lrsd::Result<()> {
    let seed = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1);
    println!("{:>5} {:>4} {:>5} {:>5} {:>9} {:>14}", "model", "q", "n", "rank", "support", "sample frob");
    for (model, q, n) in [(1, 20, 50), (2, 20, 50), (3, 20, 50), (4, 30, 100), (5, 30, 300), (6, 30, 300)] {
        let spec = SimulationSpec::new(model, q, n, seed);
        let (y, truth) = simulate(&spec, &mut spec.rng())?;
        let loss = matrix_losses(&y.sample_covariance(), &truth.sigma)?;
        println!("{model:>5} {q:>4} {n:>5} {:>5} {:>9} {:>14.3}", truth.rank, truth.support.len(), loss.frobenius);
    }
    Ok(())
}
