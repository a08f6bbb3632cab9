//! The `lrsd` command line: `simulate`, `fit`, `summarize`, `replicate`.
//!
//! Exit codes: 0 success, 2 usage or configuration, 3 data validation,
//! 4 numerical failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::config::{check_fdr, CellSection, RunConfig, SimulationSection, StudySection};
use crate::error::{Error, Result};
use crate::io::{
    config_hash, edge_list_csv, read_matrix_csv, read_trace_dir, write_json, write_matrix_csv,
    write_trace_dir, Provenance, VERSION,
};
use crate::model::{matrix_losses, simulate, support_metrics, GroundTruth, Losses, ObservationMatrix, Support, Variant};
use crate::posterior::{summarize, PosteriorSummary};
use crate::sampler::{fit, DofMode};
use crate::study::{run_study, StudyCell, StudyPlan};

#[derive(Debug, Parser)]
#[command(name = "lrsd", version, about = "Low-rank plus sparse covariance and graphical factor models by MCMC")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a data set from one of the simulation models.
    Simulate(SimulateArgs),
    /// Run a chain on a data CSV and write its trace directory.
    Fit(FitArgs),
    /// Posterior summary of a trace directory.
    Summarize(SummarizeArgs),
    /// Run a replication study from the [study] section of a config.
    Replicate(ReplicateArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub model: Option<u8>,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SamplerFlags {
    #[arg(long)]
    pub variant: Option<Variant>,
    #[arg(long = "dof-mode")]
    pub dof_mode: Option<DofMode>,
    #[arg(long = "hastings-exact")]
    pub hastings_exact: bool,
    #[arg(long = "burn-in")]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: Common,
    /// Data CSV, one row per variable and one column per observation.
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub sampler: SamplerFlags,
    /// `csv` or `binary`.
    #[arg(long = "trace-format")]
    pub trace_format: Option<String>,
    #[arg(long)]
    pub progress: bool,
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    #[arg(long)]
    pub traces: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Ground-truth JSON written by `simulate`; enables loss and FP/FN output.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Data CSV; adds the sample covariance loss when a truth is given.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub fdr: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ReplicateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub sampler: SamplerFlags,
    #[arg(long)]
    pub fdr: Option<f64>,
}

/// What was run, written next to every command's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub threads: usize,
    pub config_hash: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub provenance: Provenance,
    pub truth: GroundTruth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthComparison {
    pub bayes: Losses,
    pub sample: Option<Losses>,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryFile {
    pub provenance: Provenance,
    pub summary: PosteriorSummary,
    pub comparison: Option<TruthComparison>,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => 2,
        _ if e.is_numerical() => 4,
        _ => 3,
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Diagnostics go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("lrsd: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(command: &Command) -> Result<()> {
    match command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Summarize(a) => cmd_summarize(a),
        Command::Replicate(a) => cmd_replicate(a),
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => Ok(RunConfig::load(p)?.0),
        None => Ok(RunConfig::default()),
    }
}

fn write_manifest(command: &str, common: &Common, seed: u64, hash: &str) -> Result<()> {
    write_json(
        &common.out.join("manifest.json"),
        &RunManifest {
            command: command.into(),
            config_path: common.config.clone(),
            output_dir: common.out.clone(),
            seed,
            threads: common.threads,
            config_hash: hash.into(),
            version: VERSION.into(),
        },
    )
}

fn check_threads(common: &Common) -> Result<()> {
    if common.threads == 0 {
        return Err(Error::Config("--threads must be positive".into()));
    }
    Ok(())
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    check_threads(&a.common)?;
    let mut cfg = load_config(a.common.config.as_deref())?;
    let sim = cfg.simulation.get_or_insert_with(SimulationSection::default);
    sim.model = a.model.or(sim.model);
    sim.q = a.q.or(sim.q);
    sim.n = a.n.or(sim.n);
    sim.seed = a.common.seed.or(sim.seed);
    let spec = sim.spec()?;
    sim.q = Some(spec.q);
    sim.n = Some(spec.n);
    sim.seed = Some(spec.seed);
    let hash = config_hash(&cfg.canonical());
    let prov = Provenance::new(spec.seed, &hash);

    let (y, truth) = simulate(&spec, &mut spec.rng())?;
    fs::create_dir_all(&a.common.out)?;
    write_matrix_csv(&a.common.out.join("data.csv"), y.data(), Some(&prov))?;
    write_json(
        &a.common.out.join("truth.json"),
        &TruthFile {
            provenance: prov.clone(),
            truth: truth.clone(),
        },
    )?;
    fs::write(
        a.common.out.join("truth_support.csv"),
        edge_list_csv(&truth.support, Some(&prov)),
    )?;
    write_manifest("simulate", &a.common, spec.seed, &hash)
}

fn read_data(path: &Path) -> Result<ObservationMatrix> {
    if !path.exists() {
        return Err(Error::Validation(format!("data file {} does not exist", path.display())));
    }
    ObservationMatrix::new(read_matrix_csv(path)?)
}

fn apply_sampler_flags(cfg: &mut RunConfig, s: &SamplerFlags) {
    if let Some(v) = s.variant {
        cfg.fit.variant = Some(v);
    }
    if let Some(d) = s.dof_mode {
        cfg.fit.dof_mode = Some(match d {
            DofMode::Conjugate => "conjugate".into(),
            DofMode::Literal => "literal".into(),
        });
    }
    if s.hastings_exact {
        cfg.fit.hastings_exact = Some(true);
    }
    cfg.chain.burn_in = s.burn_in.or(cfg.chain.burn_in);
    cfg.chain.samples = s.samples.or(cfg.chain.samples);
    cfg.chain.thin = s.thin.or(cfg.chain.thin);
}

pub fn cmd_fit(a: &FitArgs) -> Result<()> {
    check_threads(&a.common)?;
    let mut cfg = load_config(a.common.config.as_deref())?;
    apply_sampler_flags(&mut cfg, &a.sampler);
    cfg.chain.seed = a.common.seed.or(cfg.chain.seed);
    if let Some(f) = &a.trace_format {
        cfg.fit.trace_format = Some(f.clone());
    }
    let variant = cfg.fit.variant();
    let format = cfg.fit.trace_format()?;
    let opts = cfg.fit.gfm_options()?;
    let mut chain = cfg.chain.resolve()?;
    chain.progress = a.progress;

    let y = read_data(&a.data)?;
    if let Some(sim) = &cfg.simulation {
        if sim.q.is_some_and(|q| q != y.q()) || sim.n.is_some_and(|n| n != y.n()) {
            return Err(Error::Validation(format!(
                "data is {}x{} but the config expects {}x{}",
                y.q(),
                y.n(),
                sim.q.map_or("?".into(), |v| v.to_string()),
                sim.n.map_or("?".into(), |v| v.to_string())
            )));
        }
    }
    let hyper = cfg.hyper.resolve(y.q(), variant)?;
    let hash = config_hash(&cfg.canonical());
    let prov = Provenance::new(chain.seed, &hash);

    let mut out = fit(&y, &hyper, &chain, variant, &opts)?;
    out.meta.config_hash = hash.clone();
    write_trace_dir(&a.common.out, &out, format, &prov)?;
    write_manifest("fit", &a.common, chain.seed, &hash)
}

pub fn read_truth(path: &Path) -> Result<GroundTruth> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Validation(format!("cannot read {}: {e}", path.display())))?;
    let file: TruthFile = serde_json::from_str(&text)?;
    Ok(file.truth)
}

pub fn cmd_summarize(a: &SummarizeArgs) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?;
    let fdr = match a.fdr {
        Some(f) => {
            check_fdr(f)?;
            f
        }
        None => cfg.fit.fdr()?,
    };
    if !a.traces.is_dir() {
        return Err(Error::Validation(format!("trace directory {} does not exist", a.traces.display())));
    }
    let (output, chain_prov) = read_trace_dir(&a.traces)?;
    let summary = summarize(&output, fdr)?;
    let hash = config_hash(&format!("{}\nfdr = {fdr}\n", chain_prov.config_hash));
    let prov = Provenance::new(chain_prov.seed, hash);

    let comparison = match &a.truth {
        None => None,
        Some(p) => {
            let truth = read_truth(p)?;
            if truth.sigma.shape() != summary.sigma_mean.shape() {
                return Err(Error::Validation("truth and chain dimensions differ".into()));
            }
            let selected: Support = summary.selected.iter().copied().collect();
            let (fp, fneg) = support_metrics(&selected, &truth.support_set());
            let sample = match &a.data {
                Some(d) => Some(matrix_losses(&read_data(d)?.sample_covariance(), &truth.sigma)?),
                None => None,
            };
            Some(TruthComparison {
                bayes: matrix_losses(&summary.sigma_mean, &truth.sigma)?,
                sample,
                false_positives: fp,
                false_negatives: fneg,
                true_rank: truth.rank,
            })
        }
    };

    fs::create_dir_all(&a.out)?;
    write_matrix_csv(&a.out.join("sigma_hat.csv"), &summary.sigma_mean, Some(&prov))?;
    write_matrix_csv(&a.out.join("low_rank_hat.csv"), &summary.low_rank_mean, Some(&prov))?;
    write_matrix_csv(&a.out.join("residual_hat.csv"), &summary.residual_masked, Some(&prov))?;
    fs::write(a.out.join("selected.csv"), edge_list_csv(&summary.selected, Some(&prov)))?;
    write_json(
        &a.out.join("summary.json"),
        &SummaryFile {
            provenance: prov,
            summary,
            comparison,
        },
    )
}

pub fn cmd_replicate(a: &ReplicateArgs) -> Result<()> {
    check_threads(&a.common)?;
    let mut cfg = load_config(a.common.config.as_deref())?;
    apply_sampler_flags(&mut cfg, &a.sampler);
    if let Some(f) = a.fdr {
        cfg.fit.fdr = Some(f);
    }
    let study = cfg.study.get_or_insert_with(StudySection::default);
    study.base_seed = a.common.seed.or(study.base_seed);
    let base_seed = study.base_seed.unwrap_or(0);
    let default_variant = cfg.fit.variant();
    let cells = study
        .cells
        .iter()
        .map(|c: &CellSection| StudyCell {
            model: c.model,
            q: c.q,
            n: c.n,
            replicates: c.replicates,
            variant: c.variant.unwrap_or(default_variant),
        })
        .collect();
    let plan = StudyPlan {
        base_seed,
        cells,
        chain: cfg.chain.resolve()?,
        hyper: cfg.hyper.clone(),
        gfm: cfg.fit.gfm_options()?,
        fdr: cfg.fit.fdr()?,
    };
    // thread count is deliberately left out of the hash: it cannot change results
    let hash = config_hash(&cfg.canonical());
    let prov = Provenance::new(base_seed, &hash);

    let report = run_study(&plan, a.common.threads)?;
    fs::create_dir_all(&a.common.out)?;
    fs::write(a.common.out.join("report.csv"), report.to_csv(&prov))?;
    fs::write(a.common.out.join("replicates.csv"), report.replicates_csv(&prov))?;
    let text = format!("{}{}", prov.header(), report.to_text());
    fs::write(a.common.out.join("report.txt"), &text)?;
    print!("{text}");
    write_manifest("replicate", &a.common, base_seed, &hash)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_kind() {
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::Validation("x".into())), 3);
        assert_eq!(exit_code(&Error::NotSpd("x".into())), 4);
    }

    #[test]
    fn usage_error_is_two() {
        assert_eq!(run(["lrsd", "fit"]), 2);
        assert_eq!(run(["lrsd", "bogus"]), 2);
    }
}
