//! Decomposable-graph residual model: conjugate HIW draw of `S`, collapsed
//! edge-toggle moves on `G`, and the random walk on the size exponent `ξ`.
//!
//! With `S` integrated out the graph posterior is
//!
//! ```text
//! p(G | ·) ∝ h(G, δ, Φ) / h(G, δ + n, Φ + Λ) · exp(−|G|^ξ)
//! ```
//!
//! Both `G` and its one-edge neighbor are decomposable, so their ratio
//! only involves the clique `C = {a, b} ∪ (N(a) ∩ N(b))` created or
//! destroyed by the toggle, its separator `C \ {a, b}` and the two cliques
//! `C \ {a}` and `C \ {b}`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::distributions::{log_hiw_normalizer, log_iw_normalizer, sample_hiw};
use crate::error::{Error, Result};
use crate::graphs::{decomposable_neighbors, is_decomposable, propose_edge_toggle, UndirectedGraph};
use crate::linalg::principal;
use crate::model::Hyperparameters;
use crate::posterior::Diagnostics;

/// Degrees of freedom used for the posterior normalizer in the graph move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DofMode {
    /// `δ + n`, matching the conjugate draw of `S`.
    #[default]
    Conjugate,
    /// `δ + n − 1`.
    Literal,
}

impl DofMode {
    pub fn posterior_dof(self, delta: f64, n: usize) -> f64 {
        match self {
            DofMode::Conjugate => delta + n as f64,
            DofMode::Literal => delta + n as f64 - 1.0,
        }
    }
}

impl std::str::FromStr for DofMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conjugate" => Ok(DofMode::Conjugate),
            "literal" => Ok(DofMode::Literal),
            other => Err(Error::Config(format!(
                "unknown dof mode '{other}' (expected conjugate or literal)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphState {
    pub graph: UndirectedGraph,
    pub xi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RwConfig {
    /// Step size of the random walk on `log ξ`.
    pub sigma_xi: f64,
}

impl Default for RwConfig {
    fn default() -> Self {
        RwConfig { sigma_xi: 0.3 }
    }
}

/// `S | G ~ HIW(G, δ + n, Φ + Λ)`.
pub fn update_s_hiw<R: Rng + ?Sized>(
    graph: &UndirectedGraph,
    scatter: &DMatrix<f64>,
    hyper: &Hyperparameters,
    n: usize,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    sample_hiw(graph, hyper.delta + n as f64, &(&hyper.phi + scatter), rng)
}

/// Collapsed log posterior of `G` up to a constant.
pub fn graph_log_posterior(
    graph: &UndirectedGraph,
    scatter: &DMatrix<f64>,
    hyper: &Hyperparameters,
    n: usize,
    xi: f64,
    dof: DofMode,
) -> Result<f64> {
    let post = &hyper.phi + scatter;
    let prior_h = log_hiw_normalizer(graph, hyper.delta, &hyper.phi)?;
    let post_h = log_hiw_normalizer(graph, dof.posterior_dof(hyper.delta, n), &post)?;
    Ok(prior_h - post_h - (graph.edge_count() as f64).powf(xi))
}

/// Per-subset log marginal likelihood `ln h(δ, Φ_A) − ln h(δ*, (Φ+Λ)_A)`.
struct SubsetTerm<'a> {
    phi: &'a DMatrix<f64>,
    post: DMatrix<f64>,
    delta: f64,
    post_dof: f64,
}

impl SubsetTerm<'_> {
    fn eval(&self, idx: &[usize]) -> Result<f64> {
        if idx.is_empty() {
            return Ok(0.0);
        }
        Ok(log_iw_normalizer(self.delta, &principal(self.phi, idx))?
            - log_iw_normalizer(self.post_dof, &principal(&self.post, idx))?)
    }
}

/// `ln p(G with (a,b)) − ln p(G without (a,b))`, likelihood part only.
/// `graph` may contain the edge or not; the common neighborhood is the same.
fn edge_log_ratio(graph: &UndirectedGraph, a: usize, b: usize, term: &SubsetTerm) -> Result<f64> {
    let sep: Vec<usize> = graph.neighbors(a).filter(|&v| v != b && graph.has_edge(v, b)).collect();
    let mut clique = sep.clone();
    clique.push(a);
    clique.push(b);
    clique.sort_unstable();
    let mut without_a = sep.clone();
    without_a.push(b);
    without_a.sort_unstable();
    let mut without_b = sep.clone();
    without_b.push(a);
    without_b.sort_unstable();
    Ok(term.eval(&clique)? + term.eval(&sep)? - term.eval(&without_a)? - term.eval(&without_b)?)
}

/// Options for the graph move.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphMoveOptions {
    pub dof: DofMode,
    /// Multiply the acceptance ratio by `|N(G)| / |N(G')|`.
    pub hastings_exact: bool,
}

/// One collapsed Metropolis–Hastings edge toggle.
pub fn update_graph<R: Rng + ?Sized>(
    state: &mut GraphState,
    scatter: &DMatrix<f64>,
    hyper: &Hyperparameters,
    n: usize,
    opts: GraphMoveOptions,
    diag: &mut Diagnostics,
    rng: &mut R,
) -> Result<()> {
    let term = SubsetTerm {
        phi: &hyper.phi,
        post: &hyper.phi + scatter,
        delta: hyper.delta,
        post_dof: opts.dof.posterior_dof(hyper.delta, n),
    };
    graph_move(state, &term, opts, diag, rng)
}

fn graph_move<R: Rng + ?Sized>(
    state: &mut GraphState,
    term: &SubsetTerm,
    opts: GraphMoveOptions,
    diag: &mut Diagnostics,
    rng: &mut R,
) -> Result<()> {
    let (proposal, (a, b)) = propose_edge_toggle(&state.graph, rng)?;
    let adding = proposal.has_edge(a, b);
    let lik = edge_log_ratio(&state.graph, a, b, term)?;
    let cur_e = state.graph.edge_count() as f64;
    let new_e = proposal.edge_count() as f64;
    let prior = -(new_e.powf(state.xi) - cur_e.powf(state.xi));
    let mut log_alpha = prior + if adding { lik } else { -lik };
    if opts.hastings_exact {
        let here = decomposable_neighbors(&state.graph).len() as f64;
        let there = decomposable_neighbors(&proposal).len() as f64;
        log_alpha += here.ln() - there.ln();
    }
    diag.graph_proposals += 1;
    if log_alpha >= 0.0 || rng.random::<f64>().ln() < log_alpha {
        state.graph = proposal;
        diag.graph_accepts += 1;
    }
    Ok(())
}

/// `moves` collapsed edge toggles in a row.
pub fn update_graph_moves<R: Rng + ?Sized>(
    state: &mut GraphState,
    scatter: &DMatrix<f64>,
    hyper: &Hyperparameters,
    n: usize,
    moves: usize,
    opts: GraphMoveOptions,
    diag: &mut Diagnostics,
    rng: &mut R,
) -> Result<()> {
    let term = SubsetTerm {
        phi: &hyper.phi,
        post: &hyper.phi + scatter,
        delta: hyper.delta,
        post_dof: opts.dof.posterior_dof(hyper.delta, n),
    };
    for _ in 0..moves {
        graph_move(state, &term, opts, diag, rng)?;
    }
    Ok(())
}

/// Normalizer of the graph prior, `Σ_{G*} exp(−|G*|^ξ)`, grouped by edge count.
#[derive(Debug, Clone, PartialEq)]
pub struct XiNormalizer {
    /// `ln N_e` for `e = 0 … q(q−1)/2`.
    pub log_counts: Vec<f64>,
    /// True when `N_e` counts decomposable graphs exactly.
    pub exact: bool,
}

/// Largest `q` for which decomposable graphs are enumerated.
pub const EXACT_NORMALIZER_MAX_Q: usize = 5;

impl XiNormalizer {
    /// Exact decomposable-graph counts for `q ≤ 5`; above that every graph
    /// with `e` edges is counted, `N_e = C(q(q−1)/2, e)`.
    pub fn new(q: usize) -> Self {
        let pairs = q * q.saturating_sub(1) / 2;
        if q <= EXACT_NORMALIZER_MAX_Q {
            let mut counts = vec![0u64; pairs + 1];
            let all: Vec<(usize, usize)> =
                (0..q).flat_map(|i| ((i + 1)..q).map(move |j| (i, j))).collect();
            for mask in 0u32..(1u32 << pairs) {
                let g = UndirectedGraph::from_edges(
                    q,
                    all.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &e)| e),
                )
                .expect("pairs are in range");
                if is_decomposable(&g) {
                    counts[mask.count_ones() as usize] += 1;
                }
            }
            XiNormalizer {
                log_counts: counts.iter().map(|&c| (c as f64).ln()).collect(),
                exact: true,
            }
        } else {
            let ln_fact = |k: usize| libm::lgamma(k as f64 + 1.0);
            XiNormalizer {
                log_counts: (0..=pairs)
                    .map(|e| ln_fact(pairs) - ln_fact(e) - ln_fact(pairs - e))
                    .collect(),
                exact: false,
            }
        }
    }

    pub fn log_z(&self, xi: f64) -> f64 {
        let terms: Vec<f64> = self
            .log_counts
            .iter()
            .enumerate()
            .map(|(e, &lc)| lc - (e as f64).powf(xi))
            .collect();
        let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
    }

    /// `ln p(ξ | G)` up to a constant, on `(0, ξ_max)`.
    pub fn log_conditional(&self, edges: usize, xi: f64, xi_max: f64) -> f64 {
        if !(xi > 0.0 && xi < xi_max) {
            return f64::NEG_INFINITY;
        }
        -(edges as f64).powf(xi) - self.log_z(xi)
    }
}

/// Random walk on `log ξ`; the proposal density contributes the Jacobian
/// factor `ξ_p / ξ_c`.
pub fn update_xi<R: Rng + ?Sized>(
    state: &mut GraphState,
    hyper: &Hyperparameters,
    rw: RwConfig,
    normalizer: &XiNormalizer,
    diag: &mut Diagnostics,
    rng: &mut R,
) -> Result<()> {
    if !(rw.sigma_xi > 0.0) {
        return Err(Error::Config("sigma_xi must be positive".into()));
    }
    let e = state.graph.edge_count();
    let step: f64 = rng.sample(StandardNormal);
    let prop = (state.xi.ln() + rw.sigma_xi * step).exp();
    diag.xi_proposals += 1;
    let lp = normalizer.log_conditional(e, prop, hyper.xi_max);
    if lp == f64::NEG_INFINITY {
        return Ok(());
    }
    let lc = normalizer.log_conditional(e, state.xi, hyper.xi_max);
    let log_alpha = lp + prop.ln() - lc - state.xi.ln();
    if log_alpha >= 0.0 || rng.random::<f64>().ln() < log_alpha {
        state.xi = prop;
        diag.xi_accepts += 1;
    }
    Ok(())
}
