//! Fit the graphical factor model with a lasso prior on the residual
//! precision to data from simulation model 6.
//!
//! ```text
//! cargo run --release --example graphical_lasso -- [q] [n] [seed]
//! ```

use lrsd::model::{simulate, support_metrics, Hyperparameters, SimulationSpec, Variant};
use lrsd::posterior::summarize;
use lrsd::sampler::{fit, ChainConfig, GfmOptions};

fn main() -> lrsd::Result<()> {
    let args: Vec<u64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let q = args.first().copied().unwrap_or(30) as usize;
    let n = args.get(1).copied().unwrap_or(300) as usize;
    let seed = args.get(2).copied().unwrap_or(1);

    let spec = SimulationSpec::new(6, q, n, seed);
    let (y, truth) = simulate(&spec, &mut spec.rng())?;
    let variant = Variant::GfmLasso;
    let config = ChainConfig {
        seed,
        progress: true,
        ..ChainConfig::default()
    };
    let out = fit(&y, &Hyperparameters::defaults(q, variant), &config, variant, &GfmOptions::default())?;
    let summary = summarize(&out, 0.20)?;
    let (fp, fn_) = support_metrics(&summary.selected.iter().copied().collect(), &truth.support_set());

    let zeros = out.draws.precision.iter().map(|c| c.iter().filter(|&&x| x == 0.0).count()).sum::<usize>();
    println!("model 6, q = {q}, n = {n}, seed = {seed}");
    println!("true rank {}  posterior mode {}  histogram {:?}", truth.rank, summary.rank, summary.rank_histogram);
    println!("true precision pairs {}  selected {}  FP {fp}  FN {fn_}", truth.support.len(), summary.selected.len());
    println!("exact zeros per stored precision draw {:.1}", zeros as f64 / out.draws.precision.len() as f64);
    Ok(())
}
