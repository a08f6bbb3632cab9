//! Numerical oracles shared by the integration tests: quadrature,
//! Kolmogorov–Smirnov statistics and direct marginal likelihoods.
#![allow(dead_code)]

pub mod checks;

use nalgebra::DMatrix;
use statrs::function::gamma::ln_gamma;

/// Composite Simpson rule with `n` (rounded up to even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Tabulated CDF of an unnormalized density on `[a, b]`, by trapezoids on a
/// fine grid.
pub struct GridCdf {
    xs: Vec<f64>,
    cdf: Vec<f64>,
}

impl GridCdf {
    pub fn new(density: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> Self {
        let h = (b - a) / n as f64;
        let xs: Vec<f64> = (0..=n).map(|i| a + i as f64 * h).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| density(x)).collect();
        let mut cdf = vec![0.0; n + 1];
        for i in 1..=n {
            cdf[i] = cdf[i - 1] + 0.5 * h * (ys[i - 1] + ys[i]);
        }
        let total = cdf[n];
        cdf.iter_mut().for_each(|c| *c /= total);
        GridCdf { xs, cdf }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.xs[0] {
            return 0.0;
        }
        let last = self.xs.len() - 1;
        if x >= self.xs[last] {
            return 1.0;
        }
        let h = self.xs[1] - self.xs[0];
        let i = (((x - self.xs[0]) / h) as usize).min(last - 1);
        let t = (x - self.xs[i]) / h;
        self.cdf[i] + t * (self.cdf[i + 1] - self.cdf[i])
    }
}

/// One-sample KS statistic `sup |F_n − F|`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Two-sample KS statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Asymptotic KS rejection threshold at level 0.01 for effective size `n`.
pub fn ks_critical_01(n: f64) -> f64 {
    1.6276 / n.sqrt()
}

pub fn ks_critical_two_sample_01(n: usize, m: usize) -> f64 {
    ks_critical_01((n * m) as f64 / (n + m) as f64)
}

/// Total-variation distance between two discrete distributions.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

pub fn normalize(w: &mut [f64]) {
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
}

pub fn log_normalize(logw: &[f64]) -> Vec<f64> {
    let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = logw.iter().map(|l| (l - top).exp()).collect();
    normalize(&mut w);
    w
}

pub fn submatrix(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |a, b| m[(idx[a], idx[b])])
}

pub fn ln_det(m: &DMatrix<f64>) -> f64 {
    m.clone().cholesky().expect("SPD").l().diagonal().iter().map(|d| 2.0 * d.ln()).sum()
}

pub fn ln_mvgamma(d: usize, a: f64) -> f64 {
    let d = d as f64;
    d * (d - 1.0) / 4.0 * std::f64::consts::PI.ln()
        + (0..d as usize).map(|i| ln_gamma(a - i as f64 / 2.0)).sum::<f64>()
}

/// Log marginal density of `n` zero-mean Gaussian observations with scatter
/// `Λ` when `Σ ~ IW(δ, Φ)` in the shape parameterization, whose density is
/// `∝ |Σ|^{−(δ+2d)/2} exp(−tr(Σ⁻¹Φ)/2)`. Drops `(2π)^{−nd/2}`.
pub fn ln_iw_marginal(delta: f64, phi: &DMatrix<f64>, scatter: &DMatrix<f64>, n: usize) -> f64 {
    let d = phi.nrows();
    if d == 0 {
        return 0.0;
    }
    let ln_k = |dof: f64, s: &DMatrix<f64>| {
        let a = (dof + d as f64 - 1.0) / 2.0;
        a * (ln_det(s) - d as f64 * 2f64.ln()) - ln_mvgamma(d, a)
    };
    ln_k(delta, phi) - ln_k(delta + n as f64, &(phi + scatter))
}

/// Decomposable marginal likelihood from explicit cliques and separators.
pub fn ln_graph_marginal(
    cliques: &[&[usize]],
    separators: &[&[usize]],
    delta: f64,
    phi: &DMatrix<f64>,
    scatter: &DMatrix<f64>,
    n: usize,
) -> f64 {
    let term = |idx: &[usize]| ln_iw_marginal(delta, &submatrix(phi, idx), &submatrix(scatter, idx), n);
    cliques.iter().map(|c| term(c)).sum::<f64>() - separators.iter().map(|s| term(s)).sum::<f64>()
}

/// The eight graphs on three vertices as edge masks over
/// `[(0,1), (0,2), (1,2)]`.
pub const PAIRS3: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

pub fn mask_edges(mask: u8) -> Vec<(usize, usize)> {
    (0..3).filter(|b| mask >> b & 1 == 1).map(|b| PAIRS3[b]).collect()
}

/// Cliques and separators of each three-vertex graph, listed by hand.
pub fn three_vertex_structure(mask: u8) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    match mask {
        0 => (vec![vec![0], vec![1], vec![2]], vec![]),
        1 => (vec![vec![0, 1], vec![2]], vec![]),
        2 => (vec![vec![0, 2], vec![1]], vec![]),
        4 => (vec![vec![1, 2], vec![0]], vec![]),
        3 => (vec![vec![0, 1], vec![0, 2]], vec![vec![0]]),
        5 => (vec![vec![0, 1], vec![1, 2]], vec![vec![1]]),
        6 => (vec![vec![0, 2], vec![1, 2]], vec![vec![2]]),
        7 => (vec![vec![0, 1, 2]], vec![]),
        _ => unreachable!(),
    }
}

pub fn three_vertex_marginal(mask: u8, delta: f64, phi: &DMatrix<f64>, scatter: &DMatrix<f64>, n: usize) -> f64 {
    let (c, s) = three_vertex_structure(mask);
    let c: Vec<&[usize]> = c.iter().map(|v| v.as_slice()).collect();
    let s: Vec<&[usize]> = s.iter().map(|v| v.as_slice()).collect();
    ln_graph_marginal(&c, &s, delta, phi, scatter, n)
}
