//! Oracle comparisons used both by the module tests and by the acceptance
//! suite. Each returns the measured discrepancy next to its threshold.

use lrsd::distributions::{sample_gig, sample_hiw, sample_inverse_wishart, GigParams};
use lrsd::graphs::UndirectedGraph;
use lrsd::model::{Hyperparameters, PrecisionState, SparseState, Variant};
use lrsd::posterior::Diagnostics;
use lrsd::sampler::{update_c_offdiagonal, update_graph, update_sparse_offdiagonal, DofMode, GraphMoveOptions, GraphState};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, InverseGamma};

use super::*;

/// Measured statistic, its bound, and a label.
#[derive(Debug, Clone)]
pub struct Check {
    pub label: String,
    pub value: f64,
    pub bound: f64,
}

impl Check {
    pub fn ok(&self) -> bool {
        self.value < self.bound
    }
}

fn check(label: impl Into<String>, value: f64, bound: f64) -> Check {
    Check {
        label: label.into(),
        value,
        bound,
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// CDF of a GIG law by quadrature on `ln x`.
pub fn gig_cdf(p: GigParams) -> impl Fn(f64) -> f64 {
    let log_f = move |y: f64| {
        let x = y.exp();
        p.order * y - (p.chi / x + p.psi * x) / 2.0
    };
    let ys: Vec<f64> = (0..=6000).map(|i| -30.0 + i as f64 * 0.01).collect();
    let top = ys.iter().map(|&y| log_f(y)).fold(f64::NEG_INFINITY, f64::max);
    let inside: Vec<f64> = ys.iter().copied().filter(|&y| log_f(y) > top - 50.0).collect();
    let (lo, hi) = (inside[0] - 0.5, inside[inside.len() - 1] + 0.5);
    let grid = GridCdf::new(move |y| (log_f(y) - top).exp(), lo, hi, 200_000);
    move |x: f64| grid.eval(x.ln())
}

pub fn gig_against_quadrature() -> Vec<Check> {
    let cases = [
        // diagonal conditional shape at n = 50
        (-24.0, 3.0, 0.5),
        (-24.0, 40.0, 2.0),
        // non-log-concave corner
        (0.3, 0.02, 0.05),
        (-0.4, 0.05, 0.02),
        // shifted ratio-of-uniforms
        (3.5, 2.0, 1.0),
        (0.5, 30.0, 30.0),
        // plain ratio-of-uniforms
        (1.2, 0.5, 0.5),
        (-2.0, 1.0, 4.0),
    ];
    let mut r = rng(1);
    cases
        .iter()
        .map(|&(order, chi, psi)| {
            let p = GigParams::new(order, chi, psi).unwrap();
            let xs: Vec<f64> = (0..20_000).map(|_| sample_gig(&p, &mut r).unwrap()).collect();
            let d = ks_statistic(&xs, gig_cdf(p));
            check(format!("GIG({order}, {chi}, {psi}) KS"), d, ks_critical_01(xs.len() as f64))
        })
        .collect()
}

pub fn scale3() -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[2.0, 0.6, 0.3, 0.6, 1.5, -0.4, 0.3, -0.4, 1.0])
}

/// Diagonal entries of `IW(δ, Φ)` against `IG(δ/2, Φ_jj/2)`.
pub fn iw_marginals() -> Vec<Check> {
    let phi = scale3();
    let delta = 6.0;
    let mut r = rng(4);
    let draws: Vec<DMatrix<f64>> = (0..20_000).map(|_| sample_inverse_wishart(delta, &phi, &mut r).unwrap()).collect();
    (0..3)
        .map(|j| {
            // statrs calls the scale of the inverse gamma its "rate"
            let ig = InverseGamma::new(delta / 2.0, phi[(j, j)] / 2.0).unwrap();
            let xs: Vec<f64> = draws.iter().map(|s| s[(j, j)]).collect();
            check(format!("IW S{j}{j} KS"), ks_statistic(&xs, |x| ig.cdf(x)), ks_critical_01(xs.len() as f64))
        })
        .collect()
}

pub fn hiw_complete_vs_iw() -> Vec<Check> {
    let phi = scale3();
    let delta = 4.0;
    let g = UndirectedGraph::complete(3);
    let mut r = rng(5);
    let n = 8000;
    let hiw: Vec<DMatrix<f64>> = (0..n).map(|_| sample_hiw(&g, delta, &phi, &mut r).unwrap()).collect();
    let iw: Vec<DMatrix<f64>> = (0..n).map(|_| sample_inverse_wishart(delta, &phi, &mut r).unwrap()).collect();
    let crit = ks_critical_two_sample_01(n, n);
    let stats: [(&str, fn(&DMatrix<f64>) -> f64); 4] = [
        ("S00", |s| s[(0, 0)]),
        ("S12", |s| s[(1, 2)]),
        ("S02", |s| s[(0, 2)]),
        ("log det", |s| s.determinant().ln()),
    ];
    stats
        .iter()
        .map(|(name, f)| {
            let a: Vec<f64> = hiw.iter().map(f).collect();
            let b: Vec<f64> = iw.iter().map(f).collect();
            check(format!("HIW vs IW {name} two-sample KS"), ks_two_sample(&a, &b), crit)
        })
        .collect()
}

pub fn mat2(a: f64, b: f64, c: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[a, b, b, c])
}

/// Atom share and sup distance between the empirical CDF of the continuous
/// draws and the normalized quadrature of `log_dens` on `(lo, hi)`.
pub fn mixture_fit(draws: &[f64], log_dens: impl Fn(f64) -> f64, lo: f64, hi: f64, log_atom: f64) -> (f64, f64, f64) {
    let top = (0..=2000)
        .map(|i| log_dens(lo + (hi - lo) * (i as f64 + 0.5) / 2001.0))
        .fold(log_atom, f64::max);
    let cont = simpson(|x| (log_dens(x) - top).exp(), lo, hi, 40_000);
    let atom = (log_atom - top).exp();
    let want_atom = atom / (atom + cont);
    let got_atom = draws.iter().filter(|&&x| x == 0.0).count() as f64 / draws.len() as f64;
    let cdf = GridCdf::new(|x| (log_dens(x) - top).exp(), lo, hi, 40_000);
    let cont_draws: Vec<f64> = draws.iter().copied().filter(|&x| x != 0.0).collect();
    (got_atom, want_atom, ks_statistic(&cont_draws, |x| cdf.eval(x)))
}

fn pair_checks(name: &str, (got, want, ks): (f64, f64, f64)) -> Vec<Check> {
    vec![
        check(format!("{name} atom share error (got {got:.4}, exact {want:.4})"), (got - want).abs(), 0.006),
        check(format!("{name} continuous CDF distance"), ks, 0.01),
    ]
}

/// `S_12` of a 2×2 covariance with everything else fixed.
pub fn covariance_pair() -> Vec<Check> {
    let (s11, s22, n, lambda, rho) = (1.3, 0.9, 5usize, 0.8, 0.4);
    let scatter = mat2(6.0, 2.1, 4.5);
    // |S|^{-n/2} exp(−tr(S⁻¹Λ)/2) on |x| < √(s11 s22)
    let log_lik = |x: f64| {
        let det = s11 * s22 - x * x;
        let tr = (s22 * scatter[(0, 0)] + s11 * scatter[(1, 1)] - 2.0 * x * scatter[(0, 1)]) / det;
        -0.5 * n as f64 * det.ln() - 0.5 * tr
    };
    let half = (s11 * s22).sqrt() * (1.0 - 1e-12);
    let mut state = SparseState {
        s: mat2(s11, 0.2, s22),
        lambda,
        rho: mat2(0.0, rho, 0.0),
    };
    let mut diag = Diagnostics::default();
    let mut r = rng(11);
    let draws: Vec<f64> = (0..200_000)
        .map(|_| {
            update_sparse_offdiagonal(&mut state, &scatter, n, 100, &mut diag, &mut r).unwrap();
            state.s[(0, 1)]
        })
        .collect();
    let slab = |x: f64| (rho * lambda / 2.0).ln() - lambda * x.abs() + log_lik(x);
    pair_checks("covariance off-diagonal", mixture_fit(&draws, slab, -half, half, (1.0 - rho).ln() + log_lik(0.0)))
}

/// `C_12` of a 2×2 precision with everything else fixed.
pub fn precision_pair() -> Vec<Check> {
    let (c11, c22, n, lambda, rho) = (2.0, 1.5, 4usize, 0.6, 0.3);
    let scatter = mat2(3.0, -1.2, 2.0);
    // |C|^{n/2} exp(−tr(CΛ)/2) in x = C_12
    let log_lik = |x: f64| 0.5 * n as f64 * (c11 * c22 - x * x).ln() - scatter[(0, 1)] * x;
    let half = (c11 * c22).sqrt();
    let mut state = PrecisionState {
        c: mat2(c11, 0.0, c22),
        lambda_c: lambda,
        rho_c: mat2(0.0, rho, 0.0),
    };
    let mut diag = Diagnostics::default();
    let mut r = rng(17);
    let draws: Vec<f64> = (0..200_000)
        .map(|_| {
            update_c_offdiagonal(&mut state, &scatter, n, 100, &mut diag, &mut r).unwrap();
            state.c[(0, 1)]
        })
        .collect();
    let slab = |x: f64| (rho * lambda / 2.0).ln() - lambda * x.abs() + log_lik(x);
    pair_checks("precision off-diagonal", mixture_fit(&draws, slab, -half, half, (1.0 - rho).ln() + log_lik(0.0)))
}

pub fn three_vertex_scatter() -> (DMatrix<f64>, usize) {
    let mut r = rng(20);
    let n = 8;
    let l = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.7, 0.7, 0.0, 0.1, 0.3, 0.9]);
    let y = &l * DMatrix::from_fn(3, n, |_, _| r.sample::<f64, _>(StandardNormal));
    (&y * y.transpose(), n)
}

/// Total variation between the collapsed edge-toggle chain on three
/// vertices and the exact posterior over the eight graphs.
pub fn three_vertex_graph_chain(hastings_exact: bool) -> (f64, Vec<f64>, Vec<f64>) {
    let h = Hyperparameters::defaults(3, Variant::GfmHiw);
    let (scatter, n) = three_vertex_scatter();
    let xi = 1.0;
    let logp: Vec<f64> = (0..8u8)
        .map(|m| three_vertex_marginal(m, h.delta, &h.phi, &scatter, n) - (m.count_ones() as f64).powf(xi))
        .collect();
    let exact = log_normalize(&logp);
    let mut state = GraphState {
        graph: UndirectedGraph::empty(3),
        xi,
    };
    let opts = GraphMoveOptions {
        dof: DofMode::Conjugate,
        hastings_exact,
    };
    let mut diag = Diagnostics::default();
    let mut r = rng(21);
    let mut freq = vec![0.0; 8];
    let iters = 100_000;
    for _ in 0..iters {
        update_graph(&mut state, &scatter, &h, n, opts, &mut diag, &mut r).unwrap();
        let mask = (0..3)
            .filter(|&b| state.graph.has_edge(PAIRS3[b].0, PAIRS3[b].1))
            .fold(0usize, |acc, b| acc | 1 << b);
        freq[mask] += 1.0 / iters as f64;
    }
    (total_variation(&freq, &exact), freq, exact)
}
