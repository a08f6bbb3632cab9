//! Single-block conditionals of the samplers checked against densities
//! written out directly and integrated numerically.

mod common;

use common::checks::{self, mat2, three_vertex_scatter};
use common::{ks_critical_01, ks_statistic, mask_edges, three_vertex_marginal, GridCdf};
use lrsd::graphs::UndirectedGraph;
use lrsd::model::{Hyperparameters, ObservationMatrix, PrecisionState, SparseState, Variant};
use lrsd::posterior::{summarize, Diagnostics};
use lrsd::sampler::{
    fit, graph_log_posterior, lambda_conditional, update_c_diagonal, update_c_offdiagonal,
    update_rho, update_rho_c, update_sparse_diagonal, update_sparse_offdiagonal, update_xi, ChainConfig, DofMode,
    GfmOptions, GraphState, RwConfig, XiNormalizer,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Gamma};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn assert_checks(checks: Vec<checks::Check>) {
    for c in &checks {
        assert!(c.ok(), "{}: {} not below {}", c.label, c.value, c.bound);
    }
}

#[test]
fn covariance_offdiagonal_matches_quadrature_with_point_mass() {
    assert_checks(checks::covariance_pair());
}

#[test]
fn covariance_offdiagonal_acceptance_tends_to_one_with_finer_grids() {
    let scatter = mat2(2.0, -0.7, 1.5);
    let mut rates = Vec::new();
    for kappa in [10, 50, 100, 500] {
        let mut state = SparseState {
            s: mat2(1.0, 0.1, 1.2),
            lambda: 1e-9,
            rho: mat2(0.0, 1.0, 0.0),
        };
        let mut diag = Diagnostics::default();
        let mut r = rng(12);
        for _ in 0..40_000 {
            update_sparse_offdiagonal(&mut state, &scatter, 3, kappa, &mut diag, &mut r).unwrap();
        }
        rates.push(diag.offdiag_accepts as f64 / diag.offdiag_proposals as f64);
    }
    for w in rates.windows(2) {
        assert!(w[1] >= w[0] - 0.003, "{rates:?}");
    }
    assert!(rates[3] > 0.99, "{rates:?}");
}

#[test]
fn zero_inclusion_weight_forces_exact_zero() {
    let mut state = SparseState {
        s: mat2(1.0, 0.3, 1.0),
        lambda: 1.0,
        rho: mat2(0.0, 0.0, 0.0),
    };
    let mut diag = Diagnostics::default();
    update_sparse_offdiagonal(&mut state, &mat2(3.0, 1.0, 2.0), 4, 100, &mut diag, &mut rng(13)).unwrap();
    assert_eq!(state.s[(0, 1)], 0.0);
    assert_eq!(state.s[(1, 0)], 0.0);
}

#[test]
fn covariance_diagonal_q1_matches_quadrature() {
    let (n, lam, scat) = (5usize, 0.7, 3.0);
    let mut state = SparseState {
        s: DMatrix::from_element(1, 1, 1.0),
        lambda: lam,
        rho: DMatrix::zeros(1, 1),
    };
    let scatter = DMatrix::from_element(1, 1, scat);
    let mut diag = Diagnostics::default();
    let mut r = rng(14);
    let draws: Vec<f64> = (0..20_000)
        .map(|_| {
            update_sparse_diagonal(&mut state, &scatter, n, &mut diag, &mut r).unwrap();
            state.s[(0, 0)]
        })
        .collect();
    // s^{-n/2} exp(−Λ/(2s)) · exp(−λ s / 2), on log s
    let log_dens = |y: f64| {
        let s = y.exp();
        -0.5 * n as f64 * y - scat / (2.0 * s) - lam * s / 2.0 + y
    };
    let cdf = GridCdf::new(|y| (log_dens(y) + 2.0).exp(), -8.0, 6.0, 100_000);
    let ks = ks_statistic(&draws, |x| cdf.eval(x.ln()));
    assert!(ks < ks_critical_01(draws.len() as f64), "KS {ks}");
}

#[test]
fn covariance_diagonal_conditional_in_three_dimensions() {
    // every diagonal entry but one held fixed by restoring it after the sweep
    let s0 = DMatrix::from_row_slice(3, 3, &[1.5, 0.4, 0.0, 0.4, 1.0, 0.3, 0.0, 0.3, 1.2]);
    let scatter = DMatrix::from_row_slice(3, 3, &[5.0, 1.0, 0.5, 1.0, 4.0, 0.8, 0.5, 0.8, 3.5]);
    let (n, lam) = (4usize, 1.1);
    let mut state = SparseState {
        s: s0.clone(),
        lambda: lam,
        rho: DMatrix::from_element(3, 3, 0.5),
    };
    let mut diag = Diagnostics::default();
    let mut r = rng(15);
    let mut draws = Vec::with_capacity(20_000);
    for _ in 0..20_000 {
        update_sparse_diagonal(&mut state, &scatter, n, &mut diag, &mut r).unwrap();
        draws.push(state.s[(0, 0)]);
        state.s = s0.clone();
    }
    // direct density of S_00 given the rest
    let log_dens = |v: f64| {
        let mut s = s0.clone();
        s[(0, 0)] = v;
        let Some(ch) = s.clone().cholesky() else { return f64::NEG_INFINITY };
        let ld: f64 = ch.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
        let tr = (ch.inverse() * &scatter).trace();
        -0.5 * n as f64 * ld - 0.5 * tr - lam * v / 2.0
    };
    // S_00 must exceed S_0,rest S_rest⁻¹ S_rest,0
    let c = 0.4 * 0.4 * 1.2 / (1.0 * 1.2 - 0.09);
    let lo = c + 1e-9;
    let top = (1..400).map(|i| log_dens(lo + i as f64 * 0.05)).fold(f64::NEG_INFINITY, f64::max);
    let cdf = GridCdf::new(|v| (log_dens(v) - top).exp(), lo, lo + 60.0, 200_000);
    let ks = ks_statistic(&draws, |x| cdf.eval(x));
    assert!(ks < ks_critical_01(draws.len() as f64), "KS {ks}");
}

#[test]
fn precision_diagonal_q1_is_gamma() {
    let (n, lam, scat) = (6usize, 0.5, 2.5);
    let mut state = PrecisionState {
        c: DMatrix::from_element(1, 1, 1.0),
        lambda_c: lam,
        rho_c: DMatrix::zeros(1, 1),
    };
    let scatter = DMatrix::from_element(1, 1, scat);
    let mut diag = Diagnostics::default();
    let mut r = rng(16);
    let draws: Vec<f64> = (0..20_000)
        .map(|_| {
            update_c_diagonal(&mut state, &scatter, n, &mut diag, &mut r).unwrap();
            state.c[(0, 0)]
        })
        .collect();
    let g = Gamma::new(n as f64 / 2.0 + 1.0, (scat + lam) / 2.0).unwrap();
    assert!(ks_statistic(&draws, |x| g.cdf(x)) < ks_critical_01(draws.len() as f64));
}

#[test]
fn precision_offdiagonal_matches_quadrature_with_point_mass() {
    assert_checks(checks::precision_pair());
}

/// `E[C_00]`, `E[C_01]` under `|C|^{n/2} exp(−tr(CΛ)/2 − λ(C_00 + C_11)/2 − λ|C_01|)`
/// on 2×2 SPD matrices, by a midpoint rule in `(C_00, C_11, u)` with
/// `C_01 = u √(C_00 C_11)`.
fn precision_grid_moments(scatter: &DMatrix<f64>, n: usize, lambda: f64) -> (f64, f64) {
    let (m, top) = (160usize, 14.0);
    let h = top / m as f64;
    let hu = 2.0 / m as f64;
    let (mut z, mut e00, mut e01) = (0.0, 0.0, 0.0);
    for i in 0..m {
        let a = (i as f64 + 0.5) * h;
        for j in 0..m {
            let b = (j as f64 + 0.5) * h;
            let root = (a * b).sqrt();
            for k in 0..m {
                let u = -1.0 + (k as f64 + 0.5) * hu;
                let x = u * root;
                let lw = 0.5 * n as f64 * (a * b - x * x).ln()
                    - 0.5 * (a * scatter[(0, 0)] + b * scatter[(1, 1)] + 2.0 * x * scatter[(0, 1)])
                    - lambda * (a + b) / 2.0
                    - lambda * x.abs()
                    + root.ln();
                let w = lw.exp();
                z += w;
                e00 += w * a;
                e01 += w * x;
            }
        }
    }
    (e00 / z, e01 / z)
}

#[test]
fn precision_two_by_two_joint_matches_grid_oracle() {
    let scatter = mat2(4.0, 1.5, 3.0);
    let (n, lambda) = (6usize, 1.0);
    let (want00, want01) = precision_grid_moments(&scatter, n, lambda);
    let mut state = PrecisionState {
        c: mat2(1.0, 0.0, 1.0),
        lambda_c: lambda,
        rho_c: mat2(0.0, 1.0, 0.0),
    };
    let mut diag = Diagnostics::default();
    let mut r = rng(18);
    let (mut s00, mut s01, mut count) = (0.0, 0.0, 0.0);
    let mut xs = Vec::new();
    for t in 0..220_000 {
        update_c_diagonal(&mut state, &scatter, n, &mut diag, &mut r).unwrap();
        update_c_offdiagonal(&mut state, &scatter, n, 100, &mut diag, &mut r).unwrap();
        if t >= 20_000 {
            s00 += state.c[(0, 0)];
            s01 += state.c[(0, 1)];
            xs.push(state.c[(0, 1)]);
            count += 1.0;
        }
    }
    let (m00, m01) = (s00 / count, s01 / count);
    assert!((m00 - want00).abs() < 0.02 * want00.abs().max(0.1) + 0.01, "E C00 {m00} vs {want00}");
    assert!((m01 - want01).abs() < 0.01, "E C01 {m01} vs {want01}");
}

#[test]
fn rho_and_lambda_conditionals() {
    let h = Hyperparameters::defaults(3, Variant::Lrsd);
    let s = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.0, 0.5, 2.0, -0.25, 0.0, -0.25, 3.0]);
    // nonzeros on or above the diagonal: 3 + 2; |off| sum 0.75; half trace 3
    let (shape, rate) = lambda_conditional(&s, &h);
    assert_eq!(shape, h.a_lambda + 5.0);
    assert!((rate - (h.b_lambda + 0.75 + 3.0)).abs() < 1e-15);

    let mut state = SparseState {
        s: s.clone(),
        lambda: 1.0,
        rho: DMatrix::from_element(3, 3, 0.5),
    };
    let mut r = rng(19);
    let n = 20_000;
    let (mut nz, mut z) = (0.0, 0.0);
    for _ in 0..n {
        update_rho(&mut state, &h, &mut r).unwrap();
        nz += state.rho[(0, 1)];
        z += state.rho[(0, 2)];
        assert_eq!(state.rho[(0, 1)], state.rho[(1, 0)]);
    }
    // Beta(1.5, 0.5) and Beta(0.5, 1.5), sd √(3/64)
    let tol = 4.5 * (3.0f64 / 64.0).sqrt() / (n as f64).sqrt();
    assert!((nz / n as f64 - 0.75).abs() < tol);
    assert!((z / n as f64 - 0.25).abs() < tol);

    let h30 = Hyperparameters::defaults(30, Variant::GfmLasso);
    let mut p = PrecisionState {
        c: DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 1.0]),
        lambda_c: 1.0,
        rho_c: DMatrix::from_element(2, 2, 0.5),
    };
    let mut m = 0.0;
    for _ in 0..n {
        update_rho_c(&mut p, &h30, &mut r).unwrap();
        m += p.rho_c[(0, 1)];
    }
    // Beta(2, 30): mean 1/16
    let sd = (2.0f64 * 30.0 / (32.0 * 32.0 * 33.0)).sqrt();
    assert!((m / n as f64 - 1.0 / 16.0).abs() < 4.5 * sd / (n as f64).sqrt());
}

#[test]
fn graph_bayes_factors_match_direct_marginals() {
    let h = Hyperparameters::defaults(3, Variant::GfmHiw);
    let (scatter, n) = three_vertex_scatter();
    let xi = 1.3;
    let diffs: Vec<f64> = (0..8u8)
        .map(|mask| {
            let g = UndirectedGraph::from_edges(3, mask_edges(mask)).unwrap();
            let lp = graph_log_posterior(&g, &scatter, &h, n, xi, DofMode::Conjugate).unwrap();
            let direct = three_vertex_marginal(mask, h.delta, &h.phi, &scatter, n) - (mask.count_ones() as f64).powf(xi);
            lp - direct
        })
        .collect();
    for d in &diffs {
        assert!((d - diffs[0]).abs() < 1e-9, "{diffs:?}");
    }
}

#[test]
fn three_vertex_graph_chain_matches_enumeration() {
    for hastings_exact in [true, false] {
        let (tv, freq, exact) = checks::three_vertex_graph_chain(hastings_exact);
        assert!(tv < 0.05, "TV {tv}: {freq:?} vs {exact:?}");
        // far tighter than needed at this chain length
        assert!(tv < 0.01, "TV {tv}");
    }
}

#[test]
fn xi_chain_matches_quadrature() {
    let h = Hyperparameters::defaults(3, Variant::GfmHiw);
    let norm = XiNormalizer::new(3);
    assert!(norm.exact);
    // all 8 graphs on three vertices are decomposable: 1, 3, 3, 1 by edge count
    let log_z = |xi: f64| (1.0 + 3.0 * (-1.0f64).exp() + 3.0 * (-(2f64.powf(xi))).exp() + (-(3f64.powf(xi))).exp()).ln();
    for edges in [0usize, 2, 3] {
        let g = UndirectedGraph::from_edges(3, mask_edges([0u8, 0, 3, 7][edges])).unwrap();
        let mut state = GraphState { graph: g, xi: 1.0 };
        let mut diag = Diagnostics::default();
        let mut r = rng(22 + edges as u64);
        let mut xs = Vec::with_capacity(100_000);
        for t in 0..210_000 {
            update_xi(&mut state, &h, RwConfig::default(), &norm, &mut diag, &mut r).unwrap();
            assert!(state.xi > 0.0 && state.xi < h.xi_max);
            if t >= 10_000 && t % 2 == 0 {
                xs.push(state.xi);
            }
        }
        let e = edges as f64;
        let cdf = GridCdf::new(|xi| (-(e.powf(xi)) - log_z(xi)).exp(), 0.0, h.xi_max, 50_000);
        let ks = ks_statistic(&xs, |x| cdf.eval(x));
        assert!(ks < 0.02, "{edges} edges: KS {ks}");
    }
}

#[test]
fn null_data_gives_rank_zero_and_identity_estimate() {
    let mut r = rng(23);
    let y = DMatrix::from_fn(2, 200, |_, _| r.sample::<f64, _>(StandardNormal));
    let y = ObservationMatrix::new(y).unwrap();
    let h = Hyperparameters::defaults(2, Variant::Lrsd);
    let config = ChainConfig {
        seed: 5,
        ..ChainConfig::default()
    };
    let out = fit(&y, &h, &config, Variant::Lrsd, &GfmOptions::default()).unwrap();
    let s = summarize(&out, 0.2).unwrap();
    assert_eq!(s.rank, 0);
    let id = DMatrix::<f64>::identity(2, 2);
    let rel = (&s.sigma_mean - &id).norm() / id.norm();
    assert!(rel < 0.15, "relative Frobenius error {rel}");
}
