//! Stored draws and their summaries: rank mode, FDR support selection,
//! posterior means and credible intervals.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::matrix_serde;
use crate::linalg::{spd_inverse, symmetrize};
use crate::model::{Support, Variant};

/// Thinned draws, one entry per stored iteration. Blocks that a variant does
/// not sample are left empty.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Draws {
    pub iterations: Vec<usize>,
    pub indicators: Vec<Vec<bool>>,
    pub variances: Vec<Vec<f64>>,
    pub loadings: Vec<DMatrix<f64>>,
    /// Residual covariance `S` (for the precision lasso, `C⁻¹`).
    pub sparse: Vec<DMatrix<f64>>,
    /// Residual precision `C`, precision-lasso variant only.
    pub precision: Vec<DMatrix<f64>>,
    /// `λ` or `λ^C`.
    pub lambda: Vec<f64>,
    /// Edge lists of `G`, HIW variant only.
    pub graphs: Vec<Vec<(usize, usize)>>,
    pub xi: Vec<f64>,
}

impl Draws {
    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }

    pub fn rank(&self, t: usize) -> usize {
        self.indicators[t].iter().filter(|&&z| z).count()
    }

    /// `M Z D_τ Mᵀ` of draw `t`.
    pub fn low_rank(&self, t: usize) -> DMatrix<f64> {
        let m = &self.loadings[t];
        let q = m.nrows();
        let mut l = DMatrix::zeros(q, q);
        for k in 0..m.ncols() {
            if self.indicators[t][k] {
                let col = m.column(k);
                l.ger(self.variances[t][k], &col, &col, 1.0);
            }
        }
        symmetrize(&mut l);
        l
    }
}

/// Counters of numerical guard events and MH acceptance.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Factorizations that needed diagonal jitter.
    pub jitter_events: u64,
    /// GIG `chi` values clamped to a tiny positive number.
    pub clamp_events: u64,
    /// Off-diagonal updates whose current value was outside the admissible interval.
    pub out_of_support_events: u64,
    pub offdiag_proposals: u64,
    pub offdiag_accepts: u64,
    pub graph_proposals: u64,
    pub graph_accepts: u64,
    pub xi_proposals: u64,
    pub xi_accepts: u64,
}

/// Run settings recorded with the draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainMeta {
    pub variant: Variant,
    pub q: usize,
    pub n: usize,
    pub r: usize,
    pub seed: u64,
    pub burn_in: usize,
    pub samples: usize,
    pub thin: usize,
    pub grid_count: usize,
    #[serde(default)]
    pub config_hash: String,
    #[serde(default = "default_version")]
    pub version: String,
}

fn default_version() -> String {
    crate::io::VERSION.to_string()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    pub meta: ChainMeta,
    pub draws: Draws,
    /// Posterior frequency of a nonzero entry (`S` or `C`) or of an edge (`G`).
    pub inclusion_freq: DMatrix<f64>,
    /// Counts of `Σ z_k` over stored draws.
    pub rank_histogram: BTreeMap<usize, usize>,
    pub diagnostics: Diagnostics,
}

impl ChainOutput {
    /// Derives inclusion frequencies and the rank histogram from the draws.
    pub fn new(meta: ChainMeta, draws: Draws, diagnostics: Diagnostics) -> Self {
        let q = meta.q;
        let mut counts = DMatrix::<f64>::zeros(q, q);
        let mut hist = BTreeMap::new();
        for t in 0..draws.len() {
            *hist.entry(draws.rank(t)).or_insert(0) += 1;
            match meta.variant {
                Variant::GfmHiw => {
                    for &(i, j) in &draws.graphs[t] {
                        counts[(i, j)] += 1.0;
                        counts[(j, i)] += 1.0;
                    }
                }
                Variant::Lrsd | Variant::GfmLasso => {
                    let m = if meta.variant == Variant::Lrsd {
                        &draws.sparse[t]
                    } else {
                        &draws.precision[t]
                    };
                    for i in 0..q {
                        for j in 0..q {
                            if i != j && m[(i, j)] != 0.0 {
                                counts[(i, j)] += 1.0;
                            }
                        }
                    }
                }
            }
        }
        if !draws.is_empty() {
            counts /= draws.len() as f64;
        }
        ChainOutput {
            meta,
            draws,
            inclusion_freq: counts,
            rank_histogram: hist,
            diagnostics,
        }
    }
}

/// Mode of `Σ z_k`; ties go to the smaller rank.
pub fn estimate_rank(output: &ChainOutput) -> Result<usize> {
    rank_mode(&output.rank_histogram)
}

pub fn rank_mode(hist: &BTreeMap<usize, usize>) -> Result<usize> {
    let mut best: Option<(usize, usize)> = None;
    for (&rank, &count) in hist {
        if count > 0 && best.is_none_or(|(_, c)| count > c) {
            best = Some((rank, count));
        }
    }
    best.map(|(r, _)| r).ok_or(Error::EmptyChain)
}

/// Bayesian FDR selection over strict-upper entries: sort by descending
/// inclusion probability and keep the longest prefix whose mean of
/// `1 − p` stays at or below `fdr_target`.
pub fn fdr_select(inclusion_freq: &DMatrix<f64>, fdr_target: f64) -> Result<Support> {
    if !(fdr_target > 0.0 && fdr_target < 1.0) {
        return Err(Error::Domain(format!("FDR target must lie in (0, 1), got {fdr_target}")));
    }
    let q = inclusion_freq.nrows();
    let mut entries = Vec::with_capacity(q * q.saturating_sub(1) / 2);
    for i in 0..q {
        for j in (i + 1)..q {
            let p = inclusion_freq[(i, j)];
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Domain(format!("inclusion frequency {p} at ({i},{j})")));
            }
            entries.push((p, i, j));
        }
    }
    // stable sort keeps index order among ties
    entries.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut sum = 0.0;
    let mut keep = 0;
    for (k, &(p, _, _)) in entries.iter().enumerate() {
        sum += 1.0 - p;
        if sum / (k + 1) as f64 <= fdr_target + 1e-12 {
            keep = k + 1;
        }
    }
    Ok(entries[..keep].iter().map(|&(_, i, j)| (i, j)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub variant: Variant,
    pub draws: usize,
    /// Posterior mode of `Σ z_k`.
    pub rank: usize,
    pub rank_mean: f64,
    pub rank_histogram: BTreeMap<usize, usize>,
    /// Rank of `L̂` from singular values above `1e-6 ·` the largest.
    pub numerical_rank: usize,
    pub fdr_target: f64,
    pub selected: Vec<(usize, usize)>,
    #[serde(with = "matrix_serde")]
    pub sigma_mean: DMatrix<f64>,
    #[serde(with = "matrix_serde")]
    pub low_rank_mean: DMatrix<f64>,
    /// Posterior mean of `S` without masking.
    #[serde(with = "matrix_serde")]
    pub sparse_mean: DMatrix<f64>,
    /// The residual point estimate with unselected off-diagonals set to zero:
    /// `Ŝ` for the covariance lasso, `Ĉ` (posterior mean precision) otherwise.
    #[serde(with = "matrix_serde")]
    pub residual_masked: DMatrix<f64>,
    /// Half-widths of central 95% intervals.
    #[serde(with = "matrix_serde")]
    pub sigma_ci_halfwidth: DMatrix<f64>,
    #[serde(with = "matrix_serde")]
    pub low_rank_ci_halfwidth: DMatrix<f64>,
    #[serde(with = "matrix_serde")]
    pub sparse_ci_halfwidth: DMatrix<f64>,
    #[serde(with = "matrix_serde")]
    pub inclusion_freq: DMatrix<f64>,
}

/// Type-7 quantile of sorted data.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn ci_halfwidths(mats: &[DMatrix<f64>]) -> DMatrix<f64> {
    let (r, c) = mats[0].shape();
    let mut buf = vec![0.0; mats.len()];
    DMatrix::from_fn(r, c, |i, j| {
        for (b, m) in buf.iter_mut().zip(mats) {
            *b = m[(i, j)];
        }
        buf.sort_by(f64::total_cmp);
        0.5 * (quantile_sorted(&buf, 0.975) - quantile_sorted(&buf, 0.025))
    })
}

fn mean_of(mats: &[DMatrix<f64>]) -> DMatrix<f64> {
    let mut acc = DMatrix::zeros(mats[0].nrows(), mats[0].ncols());
    for m in mats {
        acc += m;
    }
    acc / mats.len() as f64
}

pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let sv = m.clone().singular_values();
    let top = sv.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * top).count()
}

pub fn summarize(output: &ChainOutput, fdr_target: f64) -> Result<PosteriorSummary> {
    let d = &output.draws;
    if d.is_empty() {
        return Err(Error::EmptyChain);
    }
    let rank = estimate_rank(output)?;
    let selected = fdr_select(&output.inclusion_freq, fdr_target)?;

    let lows: Vec<DMatrix<f64>> = (0..d.len()).map(|t| d.low_rank(t)).collect();
    let sigmas: Vec<DMatrix<f64>> = lows.iter().zip(&d.sparse).map(|(l, s)| l + s).collect();
    let low_rank_mean = mean_of(&lows);
    let sparse_mean = mean_of(&d.sparse);
    // linear, so equal to the mean of the per-draw sums
    let sigma_mean = &low_rank_mean + &sparse_mean;

    let mut residual_masked = match output.meta.variant {
        Variant::Lrsd => sparse_mean.clone(),
        Variant::GfmLasso => mean_of(&d.precision),
        Variant::GfmHiw => {
            let mut inv = Vec::with_capacity(d.len());
            for s in &d.sparse {
                inv.push(spd_inverse(s)?.0);
            }
            mean_of(&inv)
        }
    };
    let q = output.meta.q;
    for i in 0..q {
        for j in (i + 1)..q {
            if !selected.contains(&(i, j)) {
                residual_masked[(i, j)] = 0.0;
                residual_masked[(j, i)] = 0.0;
            }
        }
    }

    let rank_mean = (0..d.len()).map(|t| d.rank(t) as f64).sum::<f64>() / d.len() as f64;
    Ok(PosteriorSummary {
        variant: output.meta.variant,
        draws: d.len(),
        rank,
        rank_mean,
        rank_histogram: output.rank_histogram.clone(),
        numerical_rank: numerical_rank(&low_rank_mean, 1e-6),
        fdr_target,
        selected: selected.into_iter().collect(),
        sigma_ci_halfwidth: ci_halfwidths(&sigmas),
        low_rank_ci_halfwidth: ci_halfwidths(&lows),
        sparse_ci_halfwidth: ci_halfwidths(&d.sparse),
        sigma_mean,
        low_rank_mean,
        sparse_mean,
        residual_masked,
        inclusion_freq: output.inclusion_freq.clone(),
    })
}
