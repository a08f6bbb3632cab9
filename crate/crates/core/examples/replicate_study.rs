//! A small replicated simulation study over two cells, run on a thread
//! pool. The report is identical for any number of threads.
//!
//! ```text
//! cargo run --release --example replicate_study -- [threads]
//! ```

use lrsd::config::HyperSection;
use lrsd::io::Provenance;
use lrsd::model::Variant;
use lrsd::sampler::{ChainConfig, GfmOptions};
use lrsd::study::{run_study, StudyCell, StudyPlan};

fn main() -> lrsd::Result<()> {
    let threads = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(2);
    let cell = |model, q, n, variant| StudyCell {
        model,
        q,
        n,
        replicates: 4,
        variant,
    };
    let plan = StudyPlan {
        base_seed: 2011,
        cells: vec![cell(1, 10, 50, Variant::Lrsd), cell(4, 10, 100, Variant::GfmHiw)],
        chain: ChainConfig {
            burn_in: 500,
            samples: 1000,
            ..ChainConfig::default()
        },
        hyper: HyperSection::default(),
        gfm: GfmOptions::default(),
        fdr: 0.2,
    };
    let report = run_study(&plan, threads)?;
    print!("{}", report.to_text());
    print!("{}", report.to_csv(&Provenance::new(plan.base_seed, "example")));
    Ok(())
}
