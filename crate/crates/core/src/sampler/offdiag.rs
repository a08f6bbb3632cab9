//! Independent Metropolis–Hastings for a single off-diagonal entry whose
//! conditional is a point mass at zero plus a continuous part on an open
//! interval.

use rand::Rng;

use crate::distributions::{sample_with_flag, PiecewiseProposal};
use crate::error::Result;

/// Conditional of one off-diagonal entry `x`.
///
/// `log_continuous` is the log density of the continuous part with respect
/// to Lebesgue measure in `x`, including the slab prior weight.
/// `log_atom` is the log mass at `x = 0` on the same scale, or `None` when
/// zero is not admissible or carries no prior mass.
pub struct EntryTarget<F: Fn(f64) -> f64> {
    pub lo: f64,
    pub hi: f64,
    pub log_continuous: F,
    pub log_atom: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub value: f64,
    pub accepted: bool,
    /// The current value was outside `(lo, hi)` or had zero target density.
    pub out_of_support: bool,
}

/// Breakpoints of `κ` equal-width intervals over `(lo, hi)` and the
/// target's log height at each midpoint.
pub fn grid_proposal<F: Fn(f64) -> f64>(
    target: &EntryTarget<F>,
    grid_count: usize,
) -> Result<PiecewiseProposal> {
    let k = grid_count.max(1);
    let width = (target.hi - target.lo) / k as f64;
    let mut grid: Vec<f64> = (0..=k).map(|i| target.lo + i as f64 * width).collect();
    grid[k] = target.hi;
    let heights: Vec<f64> = (0..k)
        .map(|i| (target.log_continuous)(0.5 * (grid[i] + grid[i + 1])))
        .map(|h| if h.is_nan() { f64::NEG_INFINITY } else { h })
        .collect();
    PiecewiseProposal::from_log(grid, heights, 0.0, target.log_atom)
}

/// One independent-MH step from `current`. The weight `target / proposal`
/// is 1 at the atom (its mass is exact) and `g(x) / g(midpoint)` elsewhere.
pub fn entry_mh_step<F: Fn(f64) -> f64, R: Rng + ?Sized>(
    target: &EntryTarget<F>,
    current: f64,
    grid_count: usize,
    rng: &mut R,
) -> Result<StepOutcome> {
    let proposal = grid_proposal(target, grid_count)?;
    let (x, at_atom) = sample_with_flag(&proposal, rng);
    let log_w_new = if at_atom {
        0.0
    } else {
        (target.log_continuous)(x) - proposal.log_continuous_height(x)
    };

    let log_w_cur = if current == 0.0 {
        if target.log_atom.is_some() {
            Some(0.0)
        } else {
            None
        }
    } else if current > target.lo && current < target.hi {
        let t = (target.log_continuous)(current);
        if t == f64::NEG_INFINITY || t.is_nan() {
            None
        } else {
            Some(t - proposal.log_continuous_height(current))
        }
    } else {
        None
    };

    let Some(log_w_cur) = log_w_cur else {
        return Ok(StepOutcome {
            value: x,
            accepted: true,
            out_of_support: true,
        });
    };
    let log_alpha = log_w_new - log_w_cur;
    let accepted = log_alpha >= 0.0 || rng.random::<f64>().ln() < log_alpha;
    Ok(StepOutcome {
        value: if accepted { x } else { current },
        accepted,
        out_of_support: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn atom_only_forces_zero() {
        let t = EntryTarget {
            lo: -1.0,
            hi: 1.0,
            log_continuous: |_| f64::NEG_INFINITY,
            log_atom: Some(0.0),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = entry_mh_step(&t, 0.3, 50, &mut rng).unwrap();
        assert_eq!(out.value, 0.0);
        assert!(out.accepted);
    }

    #[test]
    fn uniform_target_always_accepts() {
        let t = EntryTarget {
            lo: -1.0,
            hi: 2.0,
            log_continuous: |_| 0.0,
            log_atom: None,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut x = 0.5;
        for _ in 0..200 {
            let o = entry_mh_step(&t, x, 10, &mut rng).unwrap();
            assert!(o.accepted && o.value > -1.0 && o.value < 2.0);
            x = o.value;
        }
    }
}
