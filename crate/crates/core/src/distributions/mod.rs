//! Random variates and normalizers used by the samplers.
//!
//! Every sampler takes an explicit `&mut impl Rng`; nothing here holds state,
//! so a seeded generator reproduces the same draw sequence.

mod gig;
mod piecewise;
mod wishart;

pub use gig::{sample_gig, GigParams};
pub use piecewise::{sample_piecewise_mixture, sample_with_flag, PiecewiseProposal};
pub use wishart::{
    ln_multigamma, log_hiw_normalizer, log_iw_normalizer, sample_hiw, sample_inverse_wishart,
};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::cholesky_jittered;

pub fn sample_mvnormal<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    covariance: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    if covariance.nrows() != mean.len() || !covariance.is_square() {
        return Err(Error::Dimension(format!(
            "mean has length {}, covariance is {}x{}",
            mean.len(),
            covariance.nrows(),
            covariance.ncols()
        )));
    }
    let l = cholesky_jittered(covariance)?.chol.l();
    let z = standard_normal_vector(mean.len(), rng);
    Ok(mean + l * z)
}

pub fn standard_normal_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Gamma with shape/rate parameterization.
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    let g = Gamma::new(shape, 1.0 / rate)
        .map_err(|e| Error::Domain(format!("Gamma({shape}, rate {rate}): {e}")))?;
    Ok(g.sample(rng))
}

/// Inverse gamma: `1 / Gamma(shape, rate)`, so `scale` plays the rate role.
pub fn sample_inverse_gamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> Result<f64> {
    let x = sample_gamma(shape, scale, rng)?;
    Ok(1.0 / x.max(f64::MIN_POSITIVE))
}

pub fn sample_beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> Result<f64> {
    let d = Beta::new(a, b).map_err(|e| Error::Domain(format!("Beta({a}, {b}): {e}")))?;
    Ok(d.sample(rng))
}
