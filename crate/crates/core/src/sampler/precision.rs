//! Updates of the sparse residual precision `C` under the point-mass
//! graphical-lasso prior.
//!
//! The Schur identities run the other way round from the covariance case:
//! with `W = C⁻¹`, `C_jj − c = 1/W_jj` and `C_pp − B = (W_pp)⁻¹`. The
//! likelihood is `|C|^{n/2} exp(−tr(CΛ)/2)`, so the diagonal conditional is
//! a shifted gamma and the off-diagonal one is
//! `(1 − (x − B12)²/(a'b'))^{n/2} exp(−Λ_jk x − λ|x|)` on
//! `|x − B12| < √(a'b')`, written directly in `x = C_jk`.

use nalgebra::{DMatrix, DVector, Matrix2};
use rand::Rng;

use super::offdiag::{entry_mh_step, EntryTarget};
use super::sparse::{lambda_conditional, resample_rho};
use crate::distributions::sample_gamma;
use crate::error::{Error, Result};
use crate::linalg::{spd_inverse, symmetrize};
use crate::model::{Hyperparameters, PrecisionState};
use crate::posterior::Diagnostics;

struct Inverse {
    w: DMatrix<f64>,
}

impl Inverse {
    fn new(c: &DMatrix<f64>, diag: &mut Diagnostics) -> Result<Self> {
        let (w, jittered) = spd_inverse(c)?;
        if jittered {
            diag.jitter_events += 1;
        }
        Ok(Inverse { w })
    }

    fn rank1(&mut self, j: usize, delta: f64) {
        let den = 1.0 + delta * self.w[(j, j)];
        let col: DVector<f64> = self.w.column(j).clone_owned();
        self.w.ger(-delta / den, &col, &col, 1.0);
    }

    fn rank2(&mut self, j: usize, k: usize, delta: f64) {
        let wpp = Matrix2::new(self.w[(j, j)], self.w[(j, k)], self.w[(k, j)], self.w[(k, k)]);
        let c = Matrix2::new(0.0, delta, delta, 0.0);
        let Some(inv) = (Matrix2::identity() + c * wpp).try_inverse() else {
            return;
        };
        let g = inv * c;
        let wj: DVector<f64> = self.w.column(j).clone_owned();
        let wk: DVector<f64> = self.w.column(k).clone_owned();
        let xj = &wj * g[(0, 0)] + &wk * g[(1, 0)];
        let xk = &wj * g[(0, 1)] + &wk * g[(1, 1)];
        self.w.ger(-1.0, &xj, &wj, 1.0);
        self.w.ger(-1.0, &xk, &wk, 1.0);
    }
}

fn check(state: &PrecisionState, scatter: &DMatrix<f64>) -> Result<usize> {
    let q = state.c.nrows();
    if state.c.shape() != (q, q) || scatter.shape() != (q, q) || state.rho_c.shape() != (q, q) {
        return Err(Error::Dimension("C, rho and scatter must share one square size".into()));
    }
    if !(state.lambda_c > 0.0) {
        return Err(Error::Domain(format!("lambda_C must be positive, got {}", state.lambda_c)));
    }
    Ok(q)
}

/// Each `C_jj = c + Gamma(n/2 + 1, rate (Λ_jj + λ^C)/2)`.
pub fn update_c_diagonal<R: Rng + ?Sized>(
    state: &mut PrecisionState,
    scatter: &DMatrix<f64>,
    n: usize,
    diag: &mut Diagnostics,
    rng: &mut R,
) -> Result<()> {
    let q = check(state, scatter)?;
    let mut inv = Inverse::new(&state.c, diag)?;
    for j in 0..q {
        let wjj = inv.w[(j, j)];
        if !(wjj > 0.0) {
            return Err(Error::NotSpd(format!("covariance diagonal {j}")));
        }
        let c = state.c[(j, j)] - 1.0 / wjj;
        let g = sample_gamma(n as f64 / 2.0 + 1.0, (scatter[(j, j)] + state.lambda_c) / 2.0, rng)?;
        let new = c + g.max(f64::MIN_POSITIVE);
        let delta = new - state.c[(j, j)];
        state.c[(j, j)] = new;
        inv.rank1(j, delta);
    }
    Ok(())
}

/// Schur pieces of the `(j, k)` precision conditional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionPairTerms {
    pub a: f64,
    pub b: f64,
    pub b12: f64,
    pub lambda_jk: f64,
}

impl PrecisionPairTerms {
    pub fn log_g(&self, x: f64, n: usize, lambda: f64) -> f64 {
        let u = x - self.b12;
        let t = 1.0 - u * u / (self.a * self.b);
        if !(t > 0.0) {
            return f64::NEG_INFINITY;
        }
        0.5 * n as f64 * t.ln() - self.lambda_jk * x - lambda * x.abs()
    }

    pub fn interval(&self) -> (f64, f64) {
        let r = (self.a * self.b).sqrt();
        (self.b12 - r, self.b12 + r)
    }
}

/// Target of `C_jk` for the prior `(1 − ρ) δ₀ + ρ (λ/2) exp(−λ|x|)`.
pub fn precision_pair_target(
    terms: PrecisionPairTerms,
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

pub fn update_c_offdiagonal<R: Rng + ?Sized>(
    state: &mut PrecisionState,
    scatter: &DMatrix<f64>,
    n: usize,
    grid_count: usize,
    diag: &mut Diagnostics,
    rng: &mut R,
) -> Result<()> {
    let q = check(state, scatter)?;
    let mut inv = Inverse::new(&state.c, diag)?;
    for j in 0..q {
        for k in (j + 1)..q {
            let wpp = Matrix2::new(inv.w[(j, j)], inv.w[(j, k)], inv.w[(j, k)], inv.w[(k, k)]);
            let Some(kk) = wpp.try_inverse() else {
                diag.out_of_support_events += 1;
                continue;
            };
            let terms = PrecisionPairTerms {
                a: kk[(0, 0)],
                b: kk[(1, 1)],
                b12: state.c[(j, k)] - kk[(0, 1)],
                lambda_jk: scatter[(j, k)],
            };
            if !(terms.a > 0.0 && terms.b > 0.0) {
                diag.out_of_support_events += 1;
                continue;
            }
            let target = precision_pair_target(terms, n, state.lambda_c, state.rho_c[(j, k)]);
            let current = state.c[(j, k)];
            let out = entry_mh_step(&target, current, grid_count, rng)?;
            diag.offdiag_proposals += 1;
            if out.accepted {
                diag.offdiag_accepts += 1;
            }
            if out.out_of_support {
                diag.out_of_support_events += 1;
            }
            if out.value != current {
                state.c[(j, k)] = out.value;
                state.c[(k, j)] = out.value;
                inv.rank2(j, k, out.value - current);
            }
        }
    }
    symmetrize(&mut state.c);
    Ok(())
}

pub fn update_lambda_c<R: Rng + ?Sized>(
    state: &mut PrecisionState,
    hyper: &Hyperparameters,
    rng: &mut R,
) -> Result<()> {
    let (shape, rate) = lambda_conditional(&state.c, hyper);
    state.lambda_c = sample_gamma(shape, rate, rng)?;
    Ok(())
}

pub fn update_rho_c<R: Rng + ?Sized>(
    state: &mut PrecisionState,
    hyper: &Hyperparameters,
    rng: &mut R,
) -> Result<()> {
    resample_rho(&state.c, &mut state.rho_c, hyper, rng)
}
