use std::collections::BTreeMap;

use lrsd::model::{simulate, Hyperparameters, SimulationSpec, Variant};
use lrsd::posterior::{estimate_rank, fdr_select, numerical_rank, rank_mode, summarize};
use lrsd::sampler::{fit, ChainConfig, GfmOptions};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn freq_matrix(q: usize, vals: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(q, q);
    let mut it = vals.iter().cycle();
    for i in 0..q {
        for j in (i + 1)..q {
            let v = *it.next().unwrap();
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Largest prefix of the sorted frequencies whose mean non-inclusion stays
/// below the target.
fn prefix_oracle(vals: &[f64], target: f64) -> usize {
    let mut v = vals.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    let mut best = 0;
    let mut sum = 0.0;
    for (k, p) in v.iter().enumerate() {
        sum += 1.0 - p;
        if sum / (k + 1) as f64 <= target + 1e-12 {
            best = k + 1;
        }
    }
    best
}

#[test]
fn fdr_prefix_examples() {
    let m = freq_matrix(3, &[0.99, 0.95, 0.70]);
    assert_eq!(fdr_select(&m, 0.2).unwrap().len(), 3);
    assert_eq!(fdr_select(&m, 0.02).unwrap().len(), 1);
    assert!(fdr_select(&freq_matrix(4, &[0.5]), 0.2).unwrap().is_empty());
    assert_eq!(fdr_select(&freq_matrix(4, &[1.0]), 0.2).unwrap().len(), 6);
    assert!(fdr_select(&m, 0.0).is_err());
}

#[test]
fn rank_mode_ties_go_low() {
    let h: BTreeMap<usize, usize> = [(1, 5000), (2, 5000)].into_iter().collect();
    assert_eq!(rank_mode(&h).unwrap(), 1);
    assert!(rank_mode(&BTreeMap::new()).is_err());
}

proptest! {
    #[test]
    fn fdr_selection_matches_oracle_and_is_monotone(vals in proptest::collection::vec(0.0f64..=1.0, 15), t1 in 0.01f64..0.5, dt in 0.0f64..0.4) {
        let m = freq_matrix(6, &vals);
        let a = fdr_select(&m, t1).unwrap();
        let b = fdr_select(&m, t1 + dt).unwrap();
        prop_assert_eq!(a.len(), prefix_oracle(&vals, t1));
        prop_assert!(a.iter().all(|e| b.contains(e)));
    }
}

#[test]
fn summaries_are_consistent() {
    for (model, q, variant) in [(1, 10, Variant::Lrsd), (4, 10, Variant::GfmHiw), (6, 9, Variant::GfmLasso)] {
        let spec = SimulationSpec::new(model, q, 60, 8);
        let (y, _) = simulate(&spec, &mut spec.rng()).unwrap();
        let config = ChainConfig {
            burn_in: 100,
            samples: 200,
            thin: 2,
            seed: 9,
            ..ChainConfig::default()
        };
        let out = fit(&y, &Hyperparameters::defaults(q, variant), &config, variant, &GfmOptions::default()).unwrap();
        let s = summarize(&out, 0.2).unwrap();
        assert_eq!(s.draws, 100);
        assert_eq!(s.rank, estimate_rank(&out).unwrap());
        assert_eq!(out.rank_histogram.values().sum::<usize>(), 100);
        assert!(out.inclusion_freq.iter().all(|&p| (0.0..=1.0).contains(&p)));
        assert_eq!(s.sigma_mean, &s.low_rank_mean + &s.sparse_mean);
        assert_eq!(s.sigma_mean, s.sigma_mean.transpose());
        for i in 0..q {
            for j in 0..q {
                if i != j && !s.selected.contains(&(i.min(j), i.max(j))) {
                    assert_eq!(s.residual_masked[(i, j)], 0.0);
                }
            }
        }
        assert!(s.numerical_rank <= q);
        assert!(s.sigma_ci_halfwidth.iter().all(|&w| w >= 0.0));
    }
}

#[test]
fn numerical_rank_uses_relative_cutoff() {
    let u = DMatrix::from_fn(6, 2, |i, j| ((i + 1) * (j + 2)) as f64 % 5.0 - 2.0);
    let l = &u * u.transpose();
    assert_eq!(numerical_rank(&l, 1e-6), 2);
    assert_eq!(numerical_rank(&DMatrix::zeros(3, 3), 1e-6), 0);
}
