//! Draw from generalized inverse Gaussian laws in several regimes and
//! compare sample moments with moments from numerical integration.
//!
//! ```text
//! cargo run --release --example gig_sampling
//! ```

use lrsd::distributions::{sample_gig, GigParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `E x` and `E x²` by the trapezoid rule on `ln x`.
fn moments(p: &GigParams) -> (f64, f64) {
    let (lo, hi, steps) = (-25.0f64, 25.0f64, 200_000);
    let h = (hi - lo) / steps as f64;
    let top = (0..=steps).map(|i| p.ln_kernel((lo + i as f64 * h).exp()) + lo + i as f64 * h).fold(f64::MIN, f64::max);
    let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for i in 0..=steps {
        let y = lo + i as f64 * h;
        let x = y.exp();
        let w = (p.ln_kernel(x) + y - top).exp() * if i == 0 || i == steps { 0.5 } else { 1.0 };
        z += w;
        m1 += w * x;
        m2 += w * x * x;
    }
    (m1 / z, m2 / z)
}

fn main() -> lrsd::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let draws = 100_000;
    println!("{:>8} {:>8} {:>8} {:>12} {:>12} {:>12} {:>12}", "order", "chi", "psi", "mean", "exact", "E x^2", "exact");
    for (order, chi, psi) in [(-24.0, 3.0, 0.5), (0.3, 0.02, 0.05), (3.5, 2.0, 1.0), (1.2, 0.5, 0.5), (2.5, 0.0, 3.0)] {
        let p = GigParams::new(order, chi, psi)?;
        let xs = (0..draws).map(|_| sample_gig(&p, &mut rng)).collect::<lrsd::Result<Vec<f64>>>()?;
        let m1 = xs.iter().sum::<f64>() / draws as f64;
        let m2 = xs.iter().map(|x| x * x).sum::<f64>() / draws as f64;
        let (e1, e2) = moments(&p);
        println!("{order:>8} {chi:>8} {psi:>8} {m1:>12.5} {e1:>12.5} {m2:>12.5} {e2:>12.5}");
    }
    Ok(())
}
