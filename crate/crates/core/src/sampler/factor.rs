//! Factor-block updates shared by every variant: loadings, indicators and
//! scores, inclusion probabilities and factor variances.
//!
//! All functions take the residual precision `Ω = S⁻¹` so the graphical
//! variants can pass `Ω` straight from their own parameterization.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::distributions::{sample_beta, sample_inverse_gamma};
use crate::error::{Error, Result};
use crate::model::{FactorState, Hyperparameters};

/// `y − M Z f`.
pub fn factor_residual(factor: &FactorState, y: &DMatrix<f64>) -> DMatrix<f64> {
    y - factor.signal()
}

/// `Λ = (y − M Z f)(y − M Z f)ᵀ`.
pub fn residual_scatter(factor: &FactorState, y: &DMatrix<f64>) -> DMatrix<f64> {
    let e = factor_residual(factor, y);
    let mut l = &e * e.transpose();
    crate::linalg::symmetrize(&mut l);
    l
}

fn check_dims(factor: &FactorState, y: &DMatrix<f64>, omega: &DMatrix<f64>) -> Result<()> {
    let (q, n) = y.shape();
    let r = factor.r();
    if factor.loadings.shape() != (q, r)
        || factor.scores.shape() != (r, n)
        || factor.variances.len() != r
        || factor.inclusion_probs.len() != r
        || omega.shape() != (q, q)
    {
        return Err(Error::Dimension(format!(
            "factor block does not match data of size {q}x{n}"
        )));
    }
    Ok(())
}

/// Draws every column of `M` from
/// `N_q(Σᴹ Ω e_k f_kᵀ, Σᴹ)`, `Σᴹ = (‖f_k‖² z_k Ω + q I)⁻¹`, where `e_k` is
/// the residual with factor `k` put back. An inactive factor, or one with
/// all-zero scores, is drawn from the prior `N_q(0, I/q)`.
pub fn update_loadings<R: Rng + ?Sized>(
    factor: &mut FactorState,
    y: &DMatrix<f64>,
    omega: &DMatrix<f64>,
    rng: &mut R,
) -> Result<()> {
    check_dims(factor, y, omega)?;
    let q = y.nrows();
    let qf = q as f64;
    let eig = SymmetricEigen::new(omega.clone());
    if eig.eigenvalues.iter().any(|&w| !w.is_finite()) {
        return Err(Error::NotSpd("residual precision".into()));
    }
    let u = &eig.eigenvectors;
    let w = eig.eigenvalues.map(|v| v.max(0.0));
    let mut resid = factor_residual(factor, y);

    for k in 0..factor.r() {
        let f_k = factor.scores.row(k).transpose();
        let s = if factor.indicators[k] { f_k.norm_squared() } else { 0.0 };
        if factor.indicators[k] {
            resid.ger(1.0, &factor.loadings.column(k), &f_k, 1.0);
        }
        let z = DVector::from_fn(q, |_, _| rng.sample::<f64, _>(StandardNormal));
        let new_col = if s > 0.0 {
            // μ = U diag(w / (s w + q)) Uᵀ (e_k f_kᵀ)
            let ef = &resid * &f_k;
            let mut coef = u.transpose() * ef;
            for i in 0..q {
                coef[i] *= w[i] / (s * w[i] + qf);
                coef[i] += z[i] / (s * w[i] + qf).sqrt();
            }
            u * coef
        } else {
            z / qf.sqrt()
        };
        factor.loadings.set_column(k, &new_col);
        if factor.indicators[k] {
            resid.ger(-1.0, &factor.loadings.column(k), &f_k, 1.0);
        }
    }
    Ok(())
}

/// Quantities of the score conditional for one factor given the residual
/// `e_k` with that factor removed.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreConditional {
    /// `σᶠ = (M_kᵀ Ω M_k + τ_k⁻²)⁻¹`.
    pub sigma: f64,
    /// `μᶠ = σᶠ M_kᵀ Ω e_k`, length `n`.
    pub mean: DVector<f64>,
}

pub fn score_conditional(
    m_k: &DVector<f64>,
    e_k: &DMatrix<f64>,
    omega: &DMatrix<f64>,
    tau2: f64,
) -> ScoreConditional {
    let w = omega * m_k;
    let sigma = 1.0 / (m_k.dot(&w) + 1.0 / tau2);
    let mean = e_k.transpose() * w * sigma;
    ScoreConditional { sigma, mean }
}

/// `P(z_k = 1 | ·)` with `f_k` integrated out:
/// `p_k BF / (p_k BF + 1 − p_k)` with
/// `BF = (σᶠ/τ²)^{n/2} exp(‖μᶠ‖² / (2σᶠ))`.
pub fn indicator_probability(cond: &ScoreConditional, tau2: f64, p_k: f64) -> f64 {
    if p_k <= 0.0 {
        return 0.0;
    }
    if p_k >= 1.0 {
        return 1.0;
    }
    let n = cond.mean.len() as f64;
    let log_bf = 0.5 * n * (cond.sigma / tau2).ln() + 0.5 * cond.mean.norm_squared() / cond.sigma;
    let log_odds = p_k.ln() - (1.0 - p_k).ln() + log_bf;
    1.0 / (1.0 + (-log_odds).exp())
}

fn draw_scores<R: Rng + ?Sized>(
    cond: &ScoreConditional,
    active: bool,
    tau2: f64,
    rng: &mut R,
) -> DVector<f64> {
    let n = cond.mean.len();
    if active {
        let sd = cond.sigma.sqrt();
        DVector::from_fn(n, |i, _| cond.mean[i] + sd * rng.sample::<f64, _>(StandardNormal))
    } else {
        let sd = tau2.sqrt();
        DVector::from_fn(n, |_, _| sd * rng.sample::<f64, _>(StandardNormal))
    }
}

/// Jointly refreshes `(z_k, f_k)` for each factor in turn: `z_k` from its
/// conditional with `f_k` integrated out, then `f_k | z_k`.
pub fn update_indicators_and_scores<R: Rng + ?Sized>(
    factor: &mut FactorState,
    y: &DMatrix<f64>,
    omega: &DMatrix<f64>,
    rng: &mut R,
) -> Result<()> {
    check_dims(factor, y, omega)?;
    let mut resid = factor_residual(factor, y);
    for k in 0..factor.r() {
        let m_k = factor.loadings.column(k).clone_owned();
        if factor.indicators[k] {
            resid.ger(1.0, &m_k, &factor.scores.row(k).transpose(), 1.0);
        }
        let tau2 = factor.variances[k];
        let cond = score_conditional(&m_k, &resid, omega, tau2);
        let p = indicator_probability(&cond, tau2, factor.inclusion_probs[k]);
        let active = rng.random::<f64>() < p;
        factor.indicators[k] = active;
        let f = draw_scores(&cond, active, tau2, rng);
        factor.scores.set_row(k, &f.transpose());
        if active {
            resid.ger(-1.0, &m_k, &f, 1.0);
        }
    }
    Ok(())
}

/// `f_k | z_k` for every factor, holding the indicators fixed.
pub fn update_scores<R: Rng + ?Sized>(
    factor: &mut FactorState,
    y: &DMatrix<f64>,
    omega: &DMatrix<f64>,
    rng: &mut R,
) -> Result<()> {
    check_dims(factor, y, omega)?;
    let mut resid = factor_residual(factor, y);
    for k in 0..factor.r() {
        let m_k = factor.loadings.column(k).clone_owned();
        let active = factor.indicators[k];
        if active {
            resid.ger(1.0, &m_k, &factor.scores.row(k).transpose(), 1.0);
        }
        let cond = score_conditional(&m_k, &resid, omega, factor.variances[k]);
        let f = draw_scores(&cond, active, factor.variances[k], rng);
        factor.scores.set_row(k, &f.transpose());
        if active {
            resid.ger(-1.0, &m_k, &f, 1.0);
        }
    }
    Ok(())
}

/// `z_k` from its collapsed conditional for every factor, scores untouched.
pub fn update_indicators<R: Rng + ?Sized>(
    factor: &mut FactorState,
    y: &DMatrix<f64>,
    omega: &DMatrix<f64>,
    rng: &mut R,
) -> Result<()> {
    check_dims(factor, y, omega)?;
    let mut resid = factor_residual(factor, y);
    for k in 0..factor.r() {
        let m_k = factor.loadings.column(k).clone_owned();
        let f_k = factor.scores.row(k).transpose();
        if factor.indicators[k] {
            resid.ger(1.0, &m_k, &f_k, 1.0);
        }
        let tau2 = factor.variances[k];
        let cond = score_conditional(&m_k, &resid, omega, tau2);
        let p = indicator_probability(&cond, tau2, factor.inclusion_probs[k]);
        factor.indicators[k] = rng.random::<f64>() < p;
        if factor.indicators[k] {
            resid.ger(-1.0, &m_k, &f_k, 1.0);
        }
    }
    Ok(())
}

/// `π* = π b_p / (a_p + b_p − π a_p)`, the probability that `p_k ≠ 0`
/// given `z_k = 0`.
pub fn pi_star(pi: f64, a_p: f64, b_p: f64) -> f64 {
    pi * b_p / (a_p + b_p - pi * a_p)
}

/// `p_k | z_k` for every factor, then `π | p`.
pub fn update_inclusion_probs<R: Rng + ?Sized>(
    factor: &mut FactorState,
    hyper: &Hyperparameters,
    rng: &mut R,
) -> Result<()> {
    let star = pi_star(factor.pi, hyper.a_p, hyper.b_p);
    for k in 0..factor.r() {
        factor.inclusion_probs[k] = if factor.indicators[k] {
            sample_beta(hyper.a_p + 1.0, hyper.b_p, rng)?
        } else if star > 0.0 && rng.random::<f64>() < star {
            sample_beta(hyper.a_p, hyper.b_p + 1.0, rng)?
        } else {
            0.0
        };
    }
    let nonzero = factor.inclusion_probs.iter().filter(|&&p| p != 0.0).count() as f64;
    let zero = factor.r() as f64 - nonzero;
    factor.pi = sample_beta(hyper.a_pi + nonzero, hyper.b_pi + zero, rng)?;
    Ok(())
}

/// `τ²_k ~ IG(a_τ, b_τ)` if inactive, else `IG(a_τ + n/2, b_τ + ‖f_k‖²/2)`.
pub fn update_factor_variances<R: Rng + ?Sized>(
    factor: &mut FactorState,
    hyper: &Hyperparameters,
    rng: &mut R,
) -> Result<()> {
    let n = factor.scores.ncols() as f64;
    for k in 0..factor.r() {
        factor.variances[k] = if factor.indicators[k] {
            let ss = factor.scores.row(k).norm_squared();
            sample_inverse_gamma(hyper.a_tau + n / 2.0, hyper.b_tau + ss / 2.0, rng)?
        } else {
            sample_inverse_gamma(hyper.a_tau, hyper.b_tau, rng)?
        };
    }
    Ok(())
}

/// One pass over the factor block in the chain's order.
pub fn factor_sweep<R: Rng + ?Sized>(
    factor: &mut FactorState,
    y: &DMatrix<f64>,
    omega: &DMatrix<f64>,
    hyper: &Hyperparameters,
    rng: &mut R,
) -> Result<()> {
    update_loadings(factor, y, omega, rng)?;
    update_indicators_and_scores(factor, y, omega, rng)?;
    update_inclusion_probs(factor, hyper, rng)?;
    update_factor_variances(factor, hyper, rng)
}
