//! Point mass plus piecewise-uniform mixture, sampled by inverse CDF.
//!
//! The continuous part has constant density on each interval
//! `(grid[i], grid[i+1]]`. Heights are carried on the log scale so that
//! targets spanning hundreds of orders of magnitude stay representable.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct PiecewiseProposal {
    grid: Vec<f64>,
    log_heights: Vec<f64>,
    point_mass_location: f64,
    point_mass_weight: f64,
    /// cumulative probability of the continuous intervals, conditional on
    /// not taking the point mass; last entry is 1
    cdf: Vec<f64>,
}

impl PiecewiseProposal {
    /// Builds the mixture from unnormalized log heights and an unnormalized
    /// log point-mass (`None` or `-inf` for no atom). Both are relative to
    /// the same base measure: the atom competes with `Σ exp(log_h) · width`.
    pub fn from_log(
        grid: Vec<f64>,
        log_heights: Vec<f64>,
        point_mass_location: f64,
        log_point_mass: Option<f64>,
    ) -> Result<Self> {
        if grid.len() < 2 || log_heights.len() + 1 != grid.len() {
            return Err(Error::Domain(format!(
                "need k+1 breakpoints for k heights, got {} and {}",
                grid.len(),
                log_heights.len()
            )));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|g| !g.is_finite()) {
            return Err(Error::Domain("grid must be finite and strictly increasing".into()));
        }
        if log_heights.iter().any(|h| h.is_nan() || *h == f64::INFINITY) {
            return Err(Error::Domain("heights must be finite".into()));
        }
        let log_atom = log_point_mass.unwrap_or(f64::NEG_INFINITY);
        if log_atom.is_nan() || log_atom == f64::INFINITY {
            return Err(Error::Domain("point mass must be finite".into()));
        }

        let log_box: Vec<f64> = log_heights
            .iter()
            .zip(grid.windows(2))
            .map(|(h, w)| h + (w[1] - w[0]).ln())
            .collect();
        let top = log_box.iter().copied().fold(log_atom, f64::max);
        if top == f64::NEG_INFINITY {
            return Err(Error::Domain("proposal has zero total mass".into()));
        }
        let boxes: Vec<f64> = log_box.iter().map(|b| (b - top).exp()).collect();
        let cont: f64 = boxes.iter().sum();
        let atom = (log_atom - top).exp();
        let point_mass_weight = atom / (atom + cont);

        let mut cdf = Vec::with_capacity(boxes.len());
        let mut run = 0.0;
        for b in &boxes {
            run += b;
            cdf.push(if cont > 0.0 { run / cont } else { 0.0 });
        }
        if let Some(last) = cdf.last_mut() {
            *last = 1.0;
        }
        Ok(PiecewiseProposal {
            grid,
            log_heights,
            point_mass_location,
            point_mass_weight,
            cdf,
        })
    }

    /// Linear-scale constructor: `heights` are densities on each interval and
    /// `point_mass_weight` is the final mixture probability of the atom.
    pub fn new(
        grid: Vec<f64>,
        heights: Vec<f64>,
        point_mass_location: f64,
        point_mass_weight: f64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&point_mass_weight) {
            return Err(Error::Domain("point mass weight must lie in [0, 1]".into()));
        }
        if heights.iter().any(|h| *h < 0.0 || !h.is_finite()) {
            return Err(Error::Domain("heights must be finite and nonnegative".into()));
        }
        if grid.len() != heights.len() + 1 {
            return Err(Error::Domain("need k+1 breakpoints for k heights".into()));
        }
        let cont: f64 = heights
            .iter()
            .zip(grid.windows(2))
            .map(|(h, w)| h * (w[1] - w[0]))
            .sum();
        let log_heights: Vec<f64> = heights.iter().map(|h| h.ln()).collect();
        let log_atom = if point_mass_weight == 0.0 {
            None
        } else if point_mass_weight == 1.0 {
            Some(0.0)
        } else if cont > 0.0 {
            Some((point_mass_weight / (1.0 - point_mass_weight) * cont).ln())
        } else {
            return Err(Error::Domain("continuous part has zero mass".into()));
        };
        let mut p = Self::from_log(grid, log_heights, point_mass_location, log_atom)?;
        if point_mass_weight == 1.0 {
            p.point_mass_weight = 1.0;
        }
        Ok(p)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn log_heights(&self) -> &[f64] {
        &self.log_heights
    }

    pub fn point_mass_location(&self) -> f64 {
        self.point_mass_location
    }

    pub fn point_mass_weight(&self) -> f64 {
        self.point_mass_weight
    }

    /// Probability of each continuous interval under the full mixture.
    pub fn interval_probabilities(&self) -> Vec<f64> {
        let scale = 1.0 - self.point_mass_weight;
        let mut prev = 0.0;
        self.cdf
            .iter()
            .map(|&c| {
                let p = (c - prev) * scale;
                prev = c;
                p
            })
            .collect()
    }

    /// Index of the interval containing `x`, using `(left, right]` cells with
    /// the first cell also closed on the left.
    pub fn interval_of(&self, x: f64) -> Option<usize> {
        let k = self.log_heights.len();
        if !(x >= self.grid[0] && x <= self.grid[k]) {
            return None;
        }
        let i = self.grid.partition_point(|&g| g < x);
        Some(i.saturating_sub(1).min(k - 1))
    }

    /// Unnormalized log height of the continuous part at `x`.
    pub fn log_continuous_height(&self, x: f64) -> f64 {
        match self.interval_of(x) {
            Some(i) => self.log_heights[i],
            None => f64::NEG_INFINITY,
        }
    }
}

/// Draws from the mixture: a uniform decides atom vs continuous, then a
/// second uniform picks the interval through the CDF and the position within
/// it.
pub fn sample_piecewise_mixture<R: Rng + ?Sized>(proposal: &PiecewiseProposal, rng: &mut R) -> f64 {
    sample_with_flag(proposal, rng).0
}

/// Like [`sample_piecewise_mixture`] but also reports whether the atom was drawn.
pub fn sample_with_flag<R: Rng + ?Sized>(proposal: &PiecewiseProposal, rng: &mut R) -> (f64, bool) {
    let w = proposal.point_mass_weight;
    if w >= 1.0 || (w > 0.0 && rng.random::<f64>() < w) {
        return (proposal.point_mass_location, true);
    }
    let u: f64 = rng.random();
    let i = proposal.cdf.partition_point(|&c| c <= u).min(proposal.cdf.len() - 1);
    let (lo, hi) = (proposal.grid[i], proposal.grid[i + 1]);
    let t: f64 = rng.random();
    let x = lo + t * (hi - lo);
    // keep draws strictly inside the outer bounds
    let x = if x <= proposal.grid[0] {
        0.5 * (lo + hi)
    } else {
        x
    };
    (x, false)
}
