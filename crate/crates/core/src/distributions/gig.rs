//! Generalized inverse Gaussian variates.
//!
//! Density on `x > 0`:
//!
//! ```text
//! f(x) ∝ x^(order - 1) · exp(-(chi / x + psi · x) / 2)
//! ```
//!
//! Sampling uses ratio-of-uniforms methods: the problem is reduced to the
//! two-parameter form `g(y) ∝ y^(λ-1) exp(-ω (y + 1/y) / 2)` with
//! `ω = sqrt(chi·psi)`, `x = sqrt(chi/psi) · y`, and `λ = |order|` (negative
//! orders go through `1/Y`). Three regimes are used:
//!
//! * ratio-of-uniforms shifted by the mode when `λ > 2` or `ω > 3`;
//! * ratio-of-uniforms without shift when `λ ≥ 1 − 2.25 ω²` or `ω > 0.2`;
//! * a three-piece rejection hat for the remaining non-log-concave corner.
//!
//! `chi = 0` is the gamma limit and is sampled directly.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GigParams {
    pub order: f64,
    pub chi: f64,
    pub psi: f64,
}

impl GigParams {
    pub fn new(order: f64, chi: f64, psi: f64) -> Result<Self> {
        let p = GigParams { order, chi, psi };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.order.is_finite() && self.chi.is_finite() && self.psi.is_finite()) {
            return Err(Error::Domain(format!("non-finite GIG parameters {self:?}")));
        }
        if self.chi < 0.0 {
            return Err(Error::Domain(format!("GIG chi must be >= 0, got {}", self.chi)));
        }
        if self.psi <= 0.0 {
            return Err(Error::Domain(format!("GIG psi must be > 0, got {}", self.psi)));
        }
        if self.chi == 0.0 && self.order <= 0.0 {
            return Err(Error::Domain(
                "GIG with chi = 0 requires order > 0".to_string(),
            ));
        }
        Ok(())
    }

    /// Unnormalized log density, `-inf` outside the support.
    pub fn ln_kernel(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        (self.order - 1.0) * x.ln() - 0.5 * (self.chi / x + self.psi * x)
    }
}

pub fn sample_gig<R: Rng + ?Sized>(params: &GigParams, rng: &mut R) -> Result<f64> {
    params.validate()?;
    let GigParams { order, chi, psi } = *params;

    if chi == 0.0 {
        // x^(order-1) exp(-psi x / 2): Gamma(order, rate psi/2)
        let g = Gamma::new(order, 2.0 / psi).map_err(|e| Error::Domain(e.to_string()))?;
        return Ok(positive(g.sample(rng)));
    }

    let omega = (chi * psi).sqrt();
    let alpha = (chi / psi).sqrt();
    let lambda = order.abs();

    let y = if omega < 1e-300 {
        // numerically the gamma / inverse-gamma limit in standardized form
        standard_tiny_omega(lambda, omega, rng)
    } else if lambda > 2.0 || omega > 3.0 {
        rou_shift(lambda, omega, rng)
    } else if lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2 {
        rou_noshift(lambda, omega, rng)
    } else {
        concave_hat(lambda, omega, rng)
    };

    let x = if order < 0.0 { alpha / y } else { alpha * y };
    Ok(positive(x))
}

fn positive(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        f64::MIN_POSITIVE
    }
}

/// Uniform on the open interval (0, 1).
fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

fn gig_mode(lambda: f64, omega: f64) -> f64 {
    if lambda >= 1.0 {
        (((lambda - 1.0) * (lambda - 1.0) + omega * omega).sqrt() + (lambda - 1.0)) / omega
    } else {
        omega / (((1.0 - lambda) * (1.0 - lambda) + omega * omega).sqrt() + (1.0 - lambda))
    }
}

fn rou_noshift<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = gig_mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);
    let ym = ((lambda + 1.0) + ((lambda + 1.0) * (lambda + 1.0) + omega * omega).sqrt()) / omega;
    let um = (0.5 * (lambda + 1.0) * ym.ln() - s * (ym + 1.0 / ym) - nc).exp();
    loop {
        let u = um * open01(rng);
        let v = open01(rng);
        let x = u / v;
        if v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

fn rou_shift<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = gig_mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);

    // extrema of (x - xm) sqrt(f(x)): roots of y^3 + a y^2 + b y + c = 0
    let a = -(2.0 * (lambda + 1.0) / omega + xm);
    let b = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
    let c = xm;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let fi = (-q / (2.0 * (-(p * p * p) / 27.0).sqrt())).clamp(-1.0, 1.0).acos();
    let fak = 2.0 * (-p / 3.0).sqrt();
    let y1 = fak * (fi / 3.0).cos() - a / 3.0;
    let y2 = fak * (fi / 3.0 + 4.0 / 3.0 * std::f64::consts::PI).cos() - a / 3.0;

    let uplus = (y1 - xm) * (t * y1.ln() - s * (y1 + 1.0 / y1) - nc).exp();
    let uminus = (y2 - xm) * (t * y2.ln() - s * (y2 + 1.0 / y2) - nc).exp();
    loop {
        let u = uminus + open01(rng) * (uplus - uminus);
        let v = open01(rng);
        let x = u / v + xm;
        if x > 0.0 && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

fn concave_hat<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let xm = gig_mode(lambda, omega);
    let x0 = omega / (1.0 - lambda);
    let k0 = ((lambda - 1.0) * xm.ln() - 0.5 * omega * (xm + 1.0 / xm)).exp();
    let a0 = k0 * x0;
    let (k1, a1, k2, a2);
    if x0 >= 2.0 / omega {
        k1 = 0.0;
        a1 = 0.0;
        k2 = x0.powf(lambda - 1.0);
        a2 = k2 * 2.0 * (-omega * x0 / 2.0).exp() / omega;
    } else {
        k1 = (-omega).exp();
        a1 = if lambda == 0.0 {
            k1 * (2.0 / (omega * omega)).ln()
        } else {
            k1 / lambda * ((2.0 / omega).powf(lambda) - x0.powf(lambda))
        };
        k2 = (2.0 / omega).powf(lambda - 1.0);
        a2 = k2 * 2.0 * (-1.0f64).exp() / omega;
    }
    let total = a0 + a1 + a2;
    loop {
        let mut v = total * open01(rng);
        let (x, hx);
        if v <= a0 {
            x = x0 * v / a0;
            hx = k0;
        } else {
            v -= a0;
            if v <= a1 {
                if lambda == 0.0 {
                    x = x0 * (v / k1).exp();
                    hx = k1 / x;
                } else {
                    x = (x0.powf(lambda) + lambda / k1 * v).powf(1.0 / lambda);
                    hx = k1 * x.powf(lambda - 1.0);
                }
            } else {
                v -= a1;
                let a = x0.max(2.0 / omega);
                x = -2.0 / omega * ((-omega / 2.0 * a).exp() - omega / (2.0 * k2) * v).ln();
                hx = k2 * (-omega / 2.0 * x).exp();
            }
        }
        if !(x > 0.0 && x.is_finite()) {
            continue;
        }
        let u = open01(rng) * hx;
        if u.ln() <= (lambda - 1.0) * x.ln() - omega / 2.0 * (x + 1.0 / x) {
            return x;
        }
    }
}

/// `ω` so small that `ω (y + 1/y)` only matters far in the tails: the
/// standardized variable is then `Gamma(λ, rate ω/2)` for `λ > 0`
/// (with `λ = 0` falling back to the hat, which stays valid).
fn standard_tiny_omega<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    if lambda > 0.0 {
        match Gamma::new(lambda, 2.0 / omega) {
            Ok(g) => positive(g.sample(rng)),
            Err(_) => f64::MIN_POSITIVE,
        }
    } else {
        concave_hat(lambda, omega.max(1e-300), rng)
    }
}
