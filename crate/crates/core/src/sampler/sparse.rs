//! Updates of the sparse residual covariance `S` and its lasso
//! hyperparameters.
//!
//! Entry conditionals are written through the Schur complements that
//! `Ω = S⁻¹` exposes directly: for the diagonal, `S_jj − c = 1/Ω_jj`; for a
//! pair `p = (j, j')`, `S_pp − B = (Ω_pp)⁻¹`. The residual quadratic forms
//! come from `ΩΛΩ`. `Ω` and `ΛΩ` are refreshed at the start of each pass
//! and then kept current with rank-one/two Woodbury updates.

use nalgebra::{DMatrix, DVector, Matrix2};
use rand::Rng;

use super::offdiag::{entry_mh_step, EntryTarget};
use crate::distributions::{sample_beta, sample_gamma, sample_gig, GigParams};
use crate::error::{Error, Result};
use crate::linalg::{spd_inverse, symmetrize};
use crate::model::{Hyperparameters, SparseState};
use crate::posterior::Diagnostics;

/// Value substituted for a non-positive GIG `chi`.
pub const CHI_FLOOR: f64 = 1e-12;

pub(crate) struct Workspace {
    pub omega: DMatrix<f64>,
    /// `Λ Ω`
    pub p: DMatrix<f64>,
}

impl Workspace {
    pub fn new(s: &DMatrix<f64>, scatter: &DMatrix<f64>, diag: &mut Diagnostics) -> Result<Self> {
        let (omega, jittered) = spd_inverse(s)?;
        if jittered {
            diag.jitter_events += 1;
        }
        let p = scatter * &omega;
        Ok(Workspace { omega, p })
    }

    /// `(Ω Λ Ω)_ab`
    pub fn quad(&self, a: usize, b: usize) -> f64 {
        self.omega.column(a).dot(&self.p.column(b))
    }

    /// `S ← S + δ e_j e_jᵀ`.
    pub fn rank1(&mut self, j: usize, delta: f64) {
        let den = 1.0 + delta * self.omega[(j, j)];
        let w: DVector<f64> = self.omega.column(j).clone_owned();
        let pj: DVector<f64> = self.p.column(j).clone_owned();
        let s = -delta / den;
        self.omega.ger(s, &w, &w, 1.0);
        self.p.ger(s, &pj, &w, 1.0);
    }

    /// `S ← S + δ (e_j e_kᵀ + e_k e_jᵀ)`.
    pub fn rank2(&mut self, j: usize, k: usize, delta: f64) {
        let opp = Matrix2::new(
            self.omega[(j, j)],
            self.omega[(j, k)],
            self.omega[(k, j)],
            self.omega[(k, k)],
        );
        let c = Matrix2::new(0.0, delta, delta, 0.0);
        let g = match (Matrix2::identity() + c * opp).try_inverse() {
            Some(inv) => inv * c,
            None => return,
        };
        let wj: DVector<f64> = self.omega.column(j).clone_owned();
        let wk: DVector<f64> = self.omega.column(k).clone_owned();
        let pj: DVector<f64> = self.p.column(j).clone_owned();
        let pk: DVector<f64> = self.p.column(k).clone_owned();
        // X = Ω[:,p] G,  Ω -= X Ω[p,:]
        let xj = &wj * g[(0, 0)] + &wk * g[(1, 0)];
        let xk = &wj * g[(0, 1)] + &wk * g[(1, 1)];
        self.omega.ger(-1.0, &xj, &wj, 1.0);
        self.omega.ger(-1.0, &xk, &wk, 1.0);
        let yj = &pj * g[(0, 0)] + &pk * g[(1, 0)];
        let yk = &pj * g[(0, 1)] + &pk * g[(1, 1)];
        self.p.ger(-1.0, &yj, &wj, 1.0);
        self.p.ger(-1.0, &yk, &wk, 1.0);
    }
}

fn check(state: &SparseState, scatter: &DMatrix<f64>) -> Result<usize> {
    let q = state.s.nrows();
    if state.s.shape() != (q, q) || scatter.shape() != (q, q) || state.rho.shape() != (q, q) {
        return Err(Error::Dimension("S, rho and scatter must share one square size".into()));
    }
    if !(state.lambda > 0.0) {
        return Err(Error::Domain(format!("lambda must be positive, got {}", state.lambda)));
    }
    Ok(q)
}

/// Each `S_jj = c + ν` with `ν ~ GIG(1 − n/2, d, λ)`, `c = S_jj − 1/Ω_jj`
/// and `d = (ΩΛΩ)_jj / Ω_jj²`.
pub fn update_sparse_diagonal<R: Rng + ?Sized>(
    state: &mut SparseState,
    scatter: &DMatrix<f64>,
    n: usize,
    diag: &mut Diagnostics,
    rng: &mut R,
) -> Result<()> {
    let q = check(state, scatter)?;
    let mut ws = Workspace::new(&state.s, scatter, diag)?;
    for j in 0..q {
        let w = ws.omega[(j, j)];
        if !(w > 0.0) {
            return Err(Error::NotSpd(format!("precision diagonal {j}")));
        }
        let c = state.s[(j, j)] - 1.0 / w;
        let mut d = ws.quad(j, j) / (w * w);
        if !(d > 0.0 && d.is_finite()) {
            d = CHI_FLOOR;
            diag.clamp_events += 1;
        }
        let params = GigParams::new(1.0 - n as f64 / 2.0, d, state.lambda)?;
        let nu = sample_gig(&params, rng)?;
        let new = c + nu;
        let delta = new - state.s[(j, j)];
        state.s[(j, j)] = new;
        ws.rank1(j, delta);
    }
    Ok(())
}

/// Pieces of the `(j, k)` conditional: `a`, `b` and `B12` from the Schur
/// complement, and `D = (Ω_pp)⁻¹ (ΩΛΩ)_pp (Ω_pp)⁻¹`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairTerms {
    pub a: f64,
    pub b: f64,
    pub b12: f64,
    pub d: Matrix2<f64>,
}

impl PairTerms {
    /// `ln g(x)` at `S_jk = x`, with the continuous-part prior density
    /// `exp(−λ|x|)` included and constants dropped.
    pub fn log_g(&self, x: f64, n: usize, lambda: f64) -> f64 {
        let nu = x - self.b12;
        let ab = self.a * self.b;
        let t = 1.0 - nu * nu / ab;
        if !(t > 0.0) {
            return f64::NEG_INFINITY;
        }
        let quad = self.b * self.d[(0, 0)] + self.a * self.d[(1, 1)] - 2.0 * self.d[(0, 1)] * nu;
        -0.5 * n as f64 * t.ln() - quad / (2.0 * ab * t) - lambda * x.abs()
    }

    /// Admissible open interval for `S_jk`.
    pub fn interval(&self) -> (f64, f64) {
        let r = (self.a * self.b).sqrt();
        (self.b12 - r, self.b12 + r)
    }
}

pub(crate) fn pair_terms(ws: &Workspace, s: &DMatrix<f64>, j: usize, k: usize) -> Option<PairTerms> {
    let opp = Matrix2::new(
        ws.omega[(j, j)],
        ws.omega[(j, k)],
        ws.omega[(j, k)],
        ws.omega[(k, k)],
    );
    let kk = opp.try_inverse()?;
    let (a, b, nu_c) = (kk[(0, 0)], kk[(1, 1)], kk[(0, 1)]);
    if !(a > 0.0 && b > 0.0) {
        return None;
    }
    let qpp = Matrix2::new(ws.quad(j, j), ws.quad(j, k), ws.quad(j, k), ws.quad(k, k));
    Some(PairTerms {
        a,
        b,
        b12: s[(j, k)] - nu_c,
        d: kk * qpp * kk,
    })
}

/// Target of `S_jk` for the prior `(1 − ρ) δ₀ + ρ (λ/2) exp(−λ|x|)`.
pub fn pair_target(
    terms: PairTerms,
    n: usize,
    lambda: f64,
    rho: f64,
) -> EntryTarget<impl Fn(f64) -> f64> {
    let (lo, hi) = terms.interval();
    let slab = if rho > 0.0 { (rho * lambda / 2.0).ln() } else { f64::NEG_INFINITY };
    let log_atom = if rho < 1.0 && lo < 0.0 && hi > 0.0 {
        Some((1.0 - rho).ln() + terms.log_g(0.0, n, lambda))
    } else {
        None
    };
    EntryTarget {
        lo,
        hi,
        log_continuous: move |x| slab + terms.log_g(x, n, lambda),
        log_atom,
    }
}

/// Lexicographic sweep over `j < k`, one independent-MH step per entry.
pub fn update_sparse_offdiagonal<R: Rng + ?Sized>(
    state: &mut SparseState,
    scatter: &DMatrix<f64>,
    n: usize,
    grid_count: usize,
    diag: &mut Diagnostics,
    rng: &mut R,
) -> Result<()> {
    let q = check(state, scatter)?;
    let mut ws = Workspace::new(&state.s, scatter, diag)?;
    for j in 0..q {
        for k in (j + 1)..q {
            let Some(terms) = pair_terms(&ws, &state.s, j, k) else {
                diag.out_of_support_events += 1;
                continue;
            };
            let target = pair_target(terms, n, state.lambda, state.rho[(j, k)]);
            let current = state.s[(j, k)];
            let out = entry_mh_step(&target, current, grid_count, rng)?;
            diag.offdiag_proposals += 1;
            if out.accepted {
                diag.offdiag_accepts += 1;
            }
            if out.out_of_support {
                diag.out_of_support_events += 1;
            }
            if out.value != current {
                state.s[(j, k)] = out.value;
                state.s[(k, j)] = out.value;
                ws.rank2(j, k, out.value - current);
            }
        }
    }
    symmetrize(&mut state.s);
    Ok(())
}

/// Shape and rate of the `λ` conditional for a lasso-penalized matrix `x`:
/// `(a_λ + m, b_λ + Σ_{j<k} |x_jk| + ½ Σ x_jj)`, `m = #{j ≤ k : x_jk ≠ 0}`.
pub fn lambda_conditional(x: &DMatrix<f64>, hyper: &Hyperparameters) -> (f64, f64) {
    let q = x.nrows();
    let mut m = 0usize;
    let mut abs_sum = 0.0;
    let mut diag_sum = 0.0;
    for j in 0..q {
        for k in j..q {
            let v = x[(j, k)];
            if v != 0.0 {
                m += 1;
            }
            if j == k {
                diag_sum += v;
            } else {
                abs_sum += v.abs();
            }
        }
    }
    (hyper.a_lambda + m as f64, hyper.b_lambda + abs_sum + 0.5 * diag_sum)
}

pub fn update_lambda<R: Rng + ?Sized>(
    state: &mut SparseState,
    hyper: &Hyperparameters,
    rng: &mut R,
) -> Result<()> {
    let (shape, rate) = lambda_conditional(&state.s, hyper);
    state.lambda = sample_gamma(shape, rate, rng)?;
    Ok(())
}

/// `ρ_jk ~ Beta(a_ρ + 1{x_jk ≠ 0}, b_ρ + 1{x_jk = 0})`, kept symmetric.
pub(crate) fn resample_rho<R: Rng + ?Sized>(
    x: &DMatrix<f64>,
    rho: &mut DMatrix<f64>,
    hyper: &Hyperparameters,
    rng: &mut R,
) -> Result<()> {
    let q = x.nrows();
    for j in 0..q {
        for k in (j + 1)..q {
            let nz = (x[(j, k)] != 0.0) as u8 as f64;
            let v = sample_beta(hyper.a_rho + nz, hyper.b_rho + 1.0 - nz, rng)?;
            rho[(j, k)] = v;
            rho[(k, j)] = v;
        }
    }
    Ok(())
}

pub fn update_rho<R: Rng + ?Sized>(
    state: &mut SparseState,
    hyper: &Hyperparameters,
    rng: &mut R,
) -> Result<()> {
    resample_rho(&state.s, &mut state.rho, hyper, rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn woodbury_updates_track_inverse() {
        let s = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.5, -0.2, 0.1, -0.2, 1.0]);
        let lam = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.0, 0.2, 2.0, 0.1, 0.0, 0.1, 0.5]);
        let mut d = Diagnostics::default();
        let mut ws = Workspace::new(&s, &lam, &mut d).unwrap();
        let mut s2 = s.clone();
        s2[(1, 1)] += 0.4;
        ws.rank1(1, 0.4);
        s2[(0, 2)] -= 0.25;
        s2[(2, 0)] -= 0.25;
        ws.rank2(0, 2, -0.25);
        let inv = s2.clone().try_inverse().unwrap();
        assert!((&ws.omega - &inv).abs().max() < 1e-12);
        assert!((&ws.p - &lam * &inv).abs().max() < 1e-12);
    }

    #[test]
    fn lambda_counts_diagonal() {
        let h = Hyperparameters::defaults(3, crate::model::Variant::Lrsd);
        let (shape, rate) = lambda_conditional(&DMatrix::identity(3, 3), &h);
        assert_eq!((shape, rate), (4.0, 2.5));
    }

    fn direct_log_density(s: &DMatrix<f64>, lam: &DMatrix<f64>, n: usize) -> f64 {
        let chol = s.clone().cholesky().unwrap();
        let logdet = 2.0 * chol.l().diagonal().map(|v| v.ln()).sum();
        let inv = chol.inverse();
        -0.5 * n as f64 * logdet - 0.5 * (&inv * lam).trace()
    }

    #[test]
    fn pair_terms_match_direct_density() {
        let s = DMatrix::from_row_slice(4, 4, &[
            2.0, 0.3, 0.1, 0.0, 0.3, 1.5, -0.2, 0.2, 0.1, -0.2, 1.0, 0.1, 0.0, 0.2, 0.1, 1.2,
        ]);
        let y = DMatrix::from_fn(4, 9, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0 + 0.1 * i as f64);
        let lam = &y * y.transpose();
        let n = 9;
        let mut d = Diagnostics::default();
        let ws = Workspace::new(&s, &lam, &mut d).unwrap();
        let (j, k) = (1, 3);
        let t = pair_terms(&ws, &s, j, k).unwrap();
        let at = |x: f64| {
            let mut m = s.clone();
            m[(j, k)] = x;
            m[(k, j)] = x;
            direct_log_density(&m, &lam, n)
        };
        let base = t.log_g(0.0, n, 0.0) - at(0.0);
        for x in [-0.3, -0.1, 0.05, 0.25, 0.4] {
            assert!((t.log_g(x, n, 0.0) - at(x) - base).abs() < 1e-9, "x = {x}");
        }
        // diagonal: density of S_jj = c + nu is GIG(1 - n/2, d, .) in nu
        let w = ws.omega[(2, 2)];
        let c = s[(2, 2)] - 1.0 / w;
        let dd = ws.quad(2, 2) / (w * w);
        let at_diag = |v: f64| {
            let mut m = s.clone();
            m[(2, 2)] = c + v;
            direct_log_density(&m, &lam, n)
        };
        let gig = |v: f64| -0.5 * n as f64 * v.ln() - 0.5 * dd / v;
        let b0 = gig(1.0) - at_diag(1.0);
        for v in [0.3, 0.7, 1.9] {
            assert!((gig(v) - at_diag(v) - b0).abs() < 1e-9, "v = {v}");
        }
    }
}
