//! Replication studies: simulate, fit and score many seeded replicates per
//! cell, then aggregate in the layout of a simulation table.
//!
//! Every replicate derives its seed from `(base_seed, cell, index)` alone and
//! results are reduced in index order, so a report does not depend on the
//! number of worker threads.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::HyperSection;
use crate::error::{Error, Result};
use crate::io::Provenance;
use crate::model::{matrix_losses, simulate, support_metrics, Losses, SimulationSpec, Support, Variant};
use crate::posterior::summarize;
use crate::sampler::{fit, ChainConfig, GfmOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyCell {
    pub model: u8,
    pub q: usize,
    pub n: usize,
    pub replicates: usize,
    pub variant: Variant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyPlan {
    pub base_seed: u64,
    pub cells: Vec<StudyCell>,
    /// Chain settings shared by all replicates; the seed is replaced per replicate.
    pub chain: ChainConfig,
    pub hyper: HyperSection,
    pub gfm: GfmOptions,
    pub fdr: f64,
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Data seed of replicate `index` in cell `cell`.
pub fn replicate_seed(base: u64, cell: usize, index: usize) -> u64 {
    splitmix64(splitmix64(base ^ splitmix64(cell as u64)).wrapping_add(index as u64))
}

/// Chain seed paired with a data seed.
pub fn chain_seed(data_seed: u64) -> u64 {
    splitmix64(data_seed ^ 0xC0FF_EE00_D15E_A5E5)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateMetrics {
    pub true_rank: usize,
    pub rank: usize,
    pub rank_mean: f64,
    pub bayes: Losses,
    pub sample: Losses,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub selected: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub cell: usize,
    pub index: usize,
    pub seed: u64,
    /// Error message when the replicate failed.
    pub outcome: std::result::Result<ReplicateMetrics, String>,
}

pub fn run_replicate(plan: &StudyPlan, cell: usize, index: usize) -> ReplicateResult {
    let seed = replicate_seed(plan.base_seed, cell, index);
    let outcome = replicate_metrics(plan, &plan.cells[cell], seed).map_err(|e| e.to_string());
    ReplicateResult {
        cell,
        index,
        seed,
        outcome,
    }
}

fn replicate_metrics(plan: &StudyPlan, cell: &StudyCell, seed: u64) -> Result<ReplicateMetrics> {
    let spec = SimulationSpec::new(cell.model, cell.q, cell.n, seed);
    let (y, truth) = simulate(&spec, &mut spec.rng())?;
    let hyper = plan.hyper.resolve(cell.q, cell.variant)?;
    let config = ChainConfig {
        seed: chain_seed(seed),
        progress: false,
        ..plan.chain.clone()
    };
    let out = fit(&y, &hyper, &config, cell.variant, &plan.gfm)?;
    let summary = summarize(&out, plan.fdr)?;
    let selected: Support = summary.selected.iter().copied().collect();
    let (fp, fneg) = support_metrics(&selected, &truth.support_set());
    Ok(ReplicateMetrics {
        true_rank: truth.rank,
        rank: summary.rank,
        rank_mean: summary.rank_mean,
        bayes: matrix_losses(&summary.sigma_mean, &truth.sigma)?,
        sample: matrix_losses(&y.sample_covariance(), &truth.sigma)?,
        false_positives: fp,
        false_negatives: fneg,
        selected: selected.len(),
    })
}

/// Mean and sample standard deviation; `(NaN, NaN)` for no values and a
/// zero deviation for one.
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    fn of(xs: &[f64]) -> Self {
        let (mean, sd) = mean_sd(xs);
        MeanSd { mean, sd }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: StudyCell,
    pub completed: usize,
    pub failures: usize,
    pub true_rank: Option<usize>,
    /// Percentage of completed replicates whose posterior-mode rank is the truth.
    pub rank_recovery_pct: f64,
    pub rank: MeanSd,
    pub bayes_l1: MeanSd,
    pub bayes_frobenius: MeanSd,
    pub sample_l1: MeanSd,
    pub sample_frobenius: MeanSd,
    pub false_positives: MeanSd,
    pub false_negatives: MeanSd,
}

fn summarize_cell(cell: StudyCell, results: &[&ReplicateResult]) -> CellSummary {
    let ok: Vec<&ReplicateMetrics> = results.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
    let col = |f: &dyn Fn(&ReplicateMetrics) -> f64| MeanSd::of(&ok.iter().map(|m| f(m)).collect::<Vec<_>>());
    let hits = ok.iter().filter(|m| m.rank == m.true_rank).count();
    CellSummary {
        cell,
        completed: ok.len(),
        failures: results.len() - ok.len(),
        true_rank: ok.first().map(|m| m.true_rank),
        rank_recovery_pct: if ok.is_empty() { f64::NAN } else { 100.0 * hits as f64 / ok.len() as f64 },
        rank: col(&|m| m.rank as f64),
        bayes_l1: col(&|m| m.bayes.l1),
        bayes_frobenius: col(&|m| m.bayes.frobenius),
        sample_l1: col(&|m| m.sample.l1),
        sample_frobenius: col(&|m| m.sample.frobenius),
        false_positives: col(&|m| m.false_positives as f64),
        false_negatives: col(&|m| m.false_negatives as f64),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub cells: Vec<CellSummary>,
    pub replicates: Vec<ReplicateResult>,
}

/// Runs every replicate of every cell on a pool of `threads` workers.
pub fn run_study(plan: &StudyPlan, threads: usize) -> Result<StudyReport> {
    if threads == 0 {
        return Err(Error::Config("threads must be positive".into()));
    }
    crate::config::check_fdr(plan.fdr)?;
    plan.chain.validate()?;
    for c in &plan.cells {
        SimulationSpec::new(c.model, c.q, c.n, 0).validate()?;
    }
    let jobs: Vec<(usize, usize)> = plan
        .cells
        .iter()
        .enumerate()
        .flat_map(|(c, cell)| (0..cell.replicates).map(move |i| (c, i)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {threads} worker threads: {e}")))?;
    let replicates: Vec<ReplicateResult> =
        pool.install(|| jobs.par_iter().map(|&(c, i)| run_replicate(plan, c, i)).collect());
    let cells = plan
        .cells
        .iter()
        .enumerate()
        .map(|(c, cell)| {
            let rs: Vec<&ReplicateResult> = replicates.iter().filter(|r| r.cell == c).collect();
            summarize_cell(*cell, &rs)
        })
        .collect();
    Ok(StudyReport { cells, replicates })
}

fn fmt_ms(out: &mut String, m: &MeanSd) {
    let _ = write!(out, ",{},{}", m.mean, m.sd);
}

impl StudyReport {
    /// One row per cell.
    pub fn to_csv(&self, provenance: &Provenance) -> String {
        let mut out = provenance.header();
        out.push_str(
            "model,q,n,variant,replicates,completed,failures,true_rank,rank_recovery_pct,\
             rank_mean,rank_sd,bayes_l1_mean,bayes_l1_sd,bayes_frobenius_mean,bayes_frobenius_sd,\
             sample_l1_mean,sample_l1_sd,sample_frobenius_mean,sample_frobenius_sd,\
             fp_mean,fp_sd,fn_mean,fn_sd\n",
        );
        for s in &self.cells {
            let c = &s.cell;
            let _ = write!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                c.model,
                c.q,
                c.n,
                c.variant,
                c.replicates,
                s.completed,
                s.failures,
                s.true_rank.map(|r| r.to_string()).unwrap_or_default(),
                s.rank_recovery_pct
            );
            for m in [
                &s.rank,
                &s.bayes_l1,
                &s.bayes_frobenius,
                &s.sample_l1,
                &s.sample_frobenius,
                &s.false_positives,
                &s.false_negatives,
            ] {
                fmt_ms(&mut out, m);
            }
            out.push('\n');
        }
        out
    }

    /// One row per replicate, failures included with their message.
    pub fn replicates_csv(&self, provenance: &Provenance) -> String {
        let mut out = provenance.header();
        out.push_str(
            "cell,index,seed,status,true_rank,rank,rank_mean,bayes_l1,bayes_frobenius,\
             sample_l1,sample_frobenius,fp,fn,selected,error\n",
        );
        for r in &self.replicates {
            let _ = write!(out, "{},{},{},", r.cell, r.index, r.seed);
            match &r.outcome {
                Ok(m) => {
                    let _ = writeln!(
                        out,
                        "ok,{},{},{},{},{},{},{},{},{},{},",
                        m.true_rank,
                        m.rank,
                        m.rank_mean,
                        m.bayes.l1,
                        m.bayes.frobenius,
                        m.sample.l1,
                        m.sample.frobenius,
                        m.false_positives,
                        m.false_negatives,
                        m.selected
                    );
                }
                Err(e) => {
                    let _ = writeln!(out, "failed,,,,,,,,,,,\"{}\"", e.replace('"', "'"));
                }
            }
        }
        out
    }

    /// Human-readable table: rank recovery, mean (sd) rank, FP, FN and losses.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<6}{:>5}{:>6}  {:<10}{:>5}{:>6}{:>8}  {:<14}{:<14}{:<14}{:<16}{:<16}{:<16}{:<16}",
            "model", "q", "n", "variant", "reps", "fail", "rank%", "rank", "FP", "FN",
            "L1 bayes", "L1 sample", "F bayes", "F sample"
        );
        let ms = |m: &MeanSd| format!("{:.2} ({:.2})", m.mean, m.sd);
        for s in &self.cells {
            let c = &s.cell;
            let _ = writeln!(
                out,
                "{:<6}{:>5}{:>6}  {:<10}{:>5}{:>6}{:>8.1}  {:<14}{:<14}{:<14}{:<16}{:<16}{:<16}{:<16}",
                c.model,
                c.q,
                c.n,
                c.variant.as_str(),
                c.replicates,
                s.failures,
                s.rank_recovery_pct,
                ms(&s.rank),
                ms(&s.false_positives),
                ms(&s.false_negatives),
                ms(&s.bayes_l1),
                ms(&s.sample_l1),
                ms(&s.bayes_frobenius),
                ms(&s.sample_frobenius)
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_differ_across_cells_and_indices() {
        let a = replicate_seed(1, 0, 0);
        assert_ne!(a, replicate_seed(1, 0, 1));
        assert_ne!(a, replicate_seed(1, 1, 0));
        assert_ne!(a, replicate_seed(2, 0, 0));
        assert_ne!(a, chain_seed(a));
    }

    #[test]
    fn mean_sd_small_cases() {
        assert!(mean_sd(&[]).0.is_nan());
        assert_eq!(mean_sd(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }
}
