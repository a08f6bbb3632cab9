//! Fit the low-rank-plus-sparse model to data from simulation model 1 and
//! compare the posterior mean with the sample covariance.
//!
//! ```text
//! cargo run --release --example fit_lrsd -- [q] [n] [seed]
//! ```

use lrsd::model::{matrix_losses, simulate, support_metrics, Hyperparameters, SimulationSpec, Variant};
use lrsd::posterior::summarize;
use lrsd::sampler::{run_chain, ChainConfig};

fn main() -> lrsd::Result<()> {
    let args: Vec<u64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let q = args.first().copied().unwrap_or(20) as usize;
    let n = args.get(1).copied().unwrap_or(50) as usize;
    let seed = args.get(2).copied().unwrap_or(1);

    let spec = SimulationSpec::new(1, q, n, seed);
    let (y, truth) = simulate(&spec, &mut spec.rng())?;
    let hyper = Hyperparameters::defaults(q, Variant::Lrsd);
    let config = ChainConfig {
        burn_in: 1000,
        samples: 2000,
        thin: 2,
        seed,
        progress: true,
        ..ChainConfig::default()
    };
    let start = std::time::Instant::now();
    let out = run_chain(&y, &hyper, &config)?;
    let summary = summarize(&out, 0.20)?;

    let bayes = matrix_losses(&summary.sigma_mean, &truth.sigma)?;
    let sample = matrix_losses(&y.sample_covariance(), &truth.sigma)?;
    let est = summary.selected.iter().copied().collect();
    let (fp, fn_) = support_metrics(&est, &truth.support_set());

    println!("model 1, q = {q}, n = {n}, seed = {seed}");
    println!("elapsed           {:.1?}", start.elapsed());
    println!("true rank         {}", truth.rank);
    println!("posterior mode    {}  (mean {:.2})", summary.rank, summary.rank_mean);
    println!("rank histogram    {:?}", summary.rank_histogram);
    println!("numerical rank L  {}", summary.numerical_rank);
    println!("Frobenius loss    bayes {:.3}  sample {:.3}", bayes.frobenius, sample.frobenius);
    println!("L1 loss           bayes {:.3}  sample {:.3}", bayes.l1, sample.l1);
    println!("support FP / FN   {fp} / {fn_}");
    println!(
        "off-diagonal MH acceptance {:.3}",
        out.diagnostics.offdiag_accepts as f64 / out.diagnostics.offdiag_proposals.max(1) as f64
    );
    Ok(())
}
