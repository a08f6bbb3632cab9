use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::factor::{factor_sweep, residual_scatter};
use super::graph::{update_graph_moves, update_s_hiw, update_xi, DofMode, GraphMoveOptions, GraphState, RwConfig, XiNormalizer};
use super::precision::{update_c_diagonal, update_c_offdiagonal, update_lambda_c, update_rho_c};
use super::sparse::{update_lambda, update_rho, update_sparse_diagonal, update_sparse_offdiagonal};
use crate::error::{Error, Result};
use crate::graphs::{is_decomposable, UndirectedGraph};
use crate::linalg::{is_spd, spd_inverse};
use crate::model::{FactorState, Hyperparameters, ObservationMatrix, PrecisionState, SparseState, Variant};
use crate::posterior::{ChainMeta, ChainOutput, Diagnostics, Draws};

#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub burn_in: usize,
    /// Iterations after burn-in; every `thin`-th one is stored.
    pub samples: usize,
    pub thin: usize,
    /// Intervals `κ` of the piecewise proposal.
    pub grid_count: usize,
    pub seed: u64,
    /// Check positive definiteness (and decomposability) after every iteration.
    pub check_invariants: bool,
    /// Print progress to standard error.
    pub progress: bool,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            burn_in: 2000,
            samples: 4000,
            thin: 2,
            grid_count: 100,
            seed: 0,
            check_invariants: false,
            progress: false,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 || self.thin == 0 || self.grid_count == 0 {
            return Err(Error::Config("samples, thin and grid_count must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GfmVariant {
    Hiw,
    Lasso,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GfmOptions {
    pub dof: DofMode,
    pub hastings_exact: bool,
    /// Edge toggles per iteration; `None` means `q`.
    pub graph_moves: Option<usize>,
    pub rw: RwConfig,
}

impl Default for GfmOptions {
    fn default() -> Self {
        GfmOptions {
            dof: DofMode::Conjugate,
            hastings_exact: false,
            graph_moves: None,
            rw: RwConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Residual {
    Sparse(SparseState),
    Graph { s: DMatrix<f64>, graph: GraphState },
    Precision(PrecisionState),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub factor: FactorState,
    pub residual: Residual,
}

impl ChainState {
    /// Residual covariance `S`.
    pub fn sparse_covariance(&self) -> Result<DMatrix<f64>> {
        match &self.residual {
            Residual::Sparse(s) => Ok(s.s.clone()),
            Residual::Graph { s, .. } => Ok(s.clone()),
            Residual::Precision(p) => Ok(spd_inverse(&p.c)?.0),
        }
    }
}

/// Starting point: `M` from its prior, `f = 0`, all indicators on,
/// `τ² = 1`, `p = π = 0.5`; `S` the diagonal of the sample covariance
/// (`C` its inverse), `λ = 1`, `ρ = 0.5`, empty graph and `ξ = 1`.
pub fn initial_state<R: Rng + ?Sized>(
    y: &ObservationMatrix,
    hyper: &Hyperparameters,
    variant: Variant,
    rng: &mut R,
) -> Result<ChainState> {
    let (q, n) = (y.q(), y.n());
    let r = hyper.r;
    let sd = 1.0 / (q as f64).sqrt();
    let loadings = DMatrix::from_fn(q, r, |_, _| sd * rng.sample::<f64, _>(StandardNormal));
    let factor = FactorState {
        loadings,
        scores: DMatrix::zeros(r, n),
        indicators: vec![true; r],
        variances: vec![1.0; r],
        inclusion_probs: vec![0.5; r],
        pi: 0.5,
    };
    let var = y.sample_covariance().diagonal();
    if let Some(j) = var.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::Validation(format!("variable {j} has zero sample variance")));
    }
    let s0 = DMatrix::from_diagonal(&var);
    let rho = DMatrix::from_element(q, q, 0.5);
    let residual = match variant {
        Variant::Lrsd => Residual::Sparse(SparseState {
            s: s0,
            lambda: 1.0,
            rho,
        }),
        Variant::GfmHiw => Residual::Graph {
            s: s0,
            graph: GraphState {
                graph: UndirectedGraph::empty(q),
                xi: 1.0_f64.min(0.5 * hyper.xi_max),
            },
        },
        Variant::GfmLasso => Residual::Precision(PrecisionState {
            c: DMatrix::from_diagonal(&var.map(|v| 1.0 / v)),
            lambda_c: 1.0,
            rho_c: rho,
        }),
    };
    Ok(ChainState { factor, residual })
}

/// Low-rank-plus-sparse chain.
pub fn run_chain(y: &ObservationMatrix, hyper: &Hyperparameters, config: &ChainConfig) -> Result<ChainOutput> {
    fit(y, hyper, config, Variant::Lrsd, &GfmOptions::default())
}

/// Graphical factor model chain.
pub fn run_gfm_chain(
    y: &ObservationMatrix,
    hyper: &Hyperparameters,
    config: &ChainConfig,
    variant: GfmVariant,
    opts: &GfmOptions,
) -> Result<ChainOutput> {
    let v = match variant {
        GfmVariant::Hiw => Variant::GfmHiw,
        GfmVariant::Lasso => Variant::GfmLasso,
    };
    fit(y, hyper, config, v, opts)
}

pub fn fit(
    y: &ObservationMatrix,
    hyper: &Hyperparameters,
    config: &ChainConfig,
    variant: Variant,
    opts: &GfmOptions,
) -> Result<ChainOutput> {
    fit_with_observer(y, hyper, config, variant, opts, |_, _| Ok(()))
}

fn invariant_violation(state: &ChainState) -> Option<Error> {
    match &state.residual {
        Residual::Sparse(s) if !is_spd(&s.s) => Some(Error::NotSpd("S after sweep".into())),
        Residual::Precision(p) if !is_spd(&p.c) => Some(Error::NotSpd("C after sweep".into())),
        Residual::Graph { s, graph } => {
            if !is_decomposable(&graph.graph) {
                return Some(Error::NotDecomposable);
            }
            if !is_spd(s) {
                return Some(Error::NotSpd("S after HIW draw".into()));
            }
            let q = s.nrows();
            if q <= 10 {
                let inv = spd_inverse(s).ok()?.0;
                let scale = inv.abs().max();
                for i in 0..q {
                    for j in (i + 1)..q {
                        if !graph.graph.has_edge(i, j) && inv[(i, j)].abs() > 1e-8 * scale {
                            return Some(Error::NotSpd(format!(
                                "inverse of S has a nonzero at non-edge ({i},{j})"
                            )));
                        }
                    }
                }
            }
            None
        }
        _ => None,
    }
}

/// Runs the chain and calls `observer(iteration, state)` after every
/// iteration, burn-in included. An observer error aborts the run.
pub fn fit_with_observer<F>(
    y: &ObservationMatrix,
    hyper: &Hyperparameters,
    config: &ChainConfig,
    variant: Variant,
    opts: &GfmOptions,
    observer: F,
) -> Result<ChainOutput>
where
    F: FnMut(usize, &ChainState) -> Result<()>,
{
    config.validate()?;
    hyper.validate(y.q())?;
    let centered = y.centered();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let state = initial_state(&centered, hyper, variant, &mut rng)?;
    run_from(&centered, hyper, config, variant, opts, state, rng, observer)
}

/// Fixed ingredients of one Gibbs sweep.
#[derive(Debug, Clone)]
pub struct SweepSettings {
    pub grid_count: usize,
    pub graph_moves: usize,
    pub move_opts: GraphMoveOptions,
    pub rw: RwConfig,
    /// Graph-size normalizer, built only for the HIW variant.
    pub normalizer: Option<XiNormalizer>,
}

impl SweepSettings {
    pub fn new(q: usize, variant: Variant, opts: &GfmOptions, grid_count: usize) -> Self {
        SweepSettings {
            grid_count,
            graph_moves: opts.graph_moves.unwrap_or(q),
            move_opts: GraphMoveOptions {
                dof: opts.dof,
                hastings_exact: opts.hastings_exact,
            },
            rw: opts.rw,
            normalizer: (variant == Variant::GfmHiw).then(|| XiNormalizer::new(q)),
        }
    }
}

/// One full iteration on data `y`, which is used as given (no centering):
/// the factor block, then the residual block of whatever kind `state` holds.
pub fn gibbs_sweep<R: Rng + ?Sized>(
    state: &mut ChainState,
    y: &DMatrix<f64>,
    hyper: &Hyperparameters,
    sweep: &SweepSettings,
    diag: &mut Diagnostics,
    rng: &mut R,
) -> Result<()> {
    let (q, n) = y.shape();
    let omega = match &state.residual {
        Residual::Sparse(s) => spd_inverse(&s.s)?,
        Residual::Graph { s, .. } => spd_inverse(s)?,
        Residual::Precision(p) => (p.c.clone(), false),
    };
    if omega.1 {
        diag.jitter_events += 1;
    }
    factor_sweep(&mut state.factor, y, &omega.0, hyper, rng)?;
    let scatter = residual_scatter(&state.factor, y);
    match &mut state.residual {
        Residual::Sparse(s) => {
            update_sparse_diagonal(s, &scatter, n, diag, rng)?;
            update_sparse_offdiagonal(s, &scatter, n, sweep.grid_count, diag, rng)?;
            update_lambda(s, hyper, rng)?;
            update_rho(s, hyper, rng)?;
        }
        Residual::Graph { s, graph } => {
            if q >= 2 {
                update_graph_moves(graph, &scatter, hyper, n, sweep.graph_moves, sweep.move_opts, diag, rng)?;
            }
            *s = update_s_hiw(&graph.graph, &scatter, hyper, n, rng)?;
            let norm = sweep
                .normalizer
                .as_ref()
                .ok_or_else(|| Error::Config("HIW sweep needs a graph-size normalizer".into()))?;
            update_xi(graph, hyper, sweep.rw, norm, diag, rng)?;
        }
        Residual::Precision(p) => {
            update_c_diagonal(p, &scatter, n, diag, rng)?;
            update_c_offdiagonal(p, &scatter, n, sweep.grid_count, diag, rng)?;
            update_lambda_c(p, hyper, rng)?;
            update_rho_c(p, hyper, rng)?;
        }
    }
    Ok(())
}

/// Like [`fit_with_observer`] but starting from `state`, whose residual
/// kind must match `variant`. The chain's generator is seeded from
/// `config.seed` as usual.
pub fn fit_from_state<F>(
    y: &ObservationMatrix,
    hyper: &Hyperparameters,
    config: &ChainConfig,
    variant: Variant,
    opts: &GfmOptions,
    state: ChainState,
    observer: F,
) -> Result<ChainOutput>
where
    F: FnMut(usize, &ChainState) -> Result<()>,
{
    config.validate()?;
    hyper.validate(y.q())?;
    let matches = matches!(
        (&state.residual, variant),
        (Residual::Sparse(_), Variant::Lrsd)
            | (Residual::Graph { .. }, Variant::GfmHiw)
            | (Residual::Precision(_), Variant::GfmLasso)
    );
    if !matches {
        return Err(Error::Config(format!("initial state does not match variant {variant}")));
    }
    let rng = ChaCha8Rng::seed_from_u64(config.seed);
    run_from(&y.centered(), hyper, config, variant, opts, state, rng, observer)
}

#[allow(clippy::too_many_arguments)]
fn run_from<F>(
    centered: &ObservationMatrix,
    hyper: &Hyperparameters,
    config: &ChainConfig,
    variant: Variant,
    opts: &GfmOptions,
    mut state: ChainState,
    mut rng: ChaCha8Rng,
    mut observer: F,
) -> Result<ChainOutput>
where
    F: FnMut(usize, &ChainState) -> Result<()>,
{
    if opts.rw.sigma_xi <= 0.0 {
        return Err(Error::Config("sigma_xi must be positive".into()));
    }
    let data = centered.data();
    let (q, n) = (centered.q(), centered.n());
    let mut diag = Diagnostics::default();
    let sweep = SweepSettings::new(q, variant, opts, config.grid_count);
    let total = config.burn_in + config.samples;
    let mut draws = Draws::default();
    let report_every = (total / 10).max(1);

    for t in 0..total {
        gibbs_sweep(&mut state, data, hyper, &sweep, &mut diag, &mut rng).map_err(|e| e.at_iteration(t))?;
        if config.check_invariants {
            if let Some(e) = invariant_violation(&state) {
                return Err(e.at_iteration(t));
            }
        }
        observer(t, &state).map_err(|e| e.at_iteration(t))?;

        if t >= config.burn_in && (t - config.burn_in) % config.thin == 0 {
            draws.iterations.push(t);
            draws.indicators.push(state.factor.indicators.clone());
            draws.variances.push(state.factor.variances.clone());
            draws.loadings.push(state.factor.loadings.clone());
            match &state.residual {
                Residual::Sparse(s) => {
                    draws.sparse.push(s.s.clone());
                    draws.lambda.push(s.lambda);
                }
                Residual::Graph { s, graph } => {
                    draws.sparse.push(s.clone());
                    draws.graphs.push(graph.graph.edges());
                    draws.xi.push(graph.xi);
                }
                Residual::Precision(p) => {
                    draws.sparse.push(spd_inverse(&p.c).map_err(|e| e.at_iteration(t))?.0);
                    draws.precision.push(p.c.clone());
                    draws.lambda.push(p.lambda_c);
                }
            }
        }
        if config.progress && (t + 1) % report_every == 0 {
            eprintln!("[{}] iteration {}/{}", variant, t + 1, total);
        }
    }

    let meta = ChainMeta {
        variant,
        q,
        n,
        r: hyper.r,
        seed: config.seed,
        burn_in: config.burn_in,
        samples: config.samples,
        thin: config.thin,
        grid_count: config.grid_count,
        config_hash: String::new(),
        version: crate::io::VERSION.to_string(),
    };
    Ok(ChainOutput::new(meta, draws, diag))
}
