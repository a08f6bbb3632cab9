//! Synthetic data for simulation models 1 to 6.
//!
//! | model | Σ | truth support |
//! |---|---|---|
//! | 1 | `M D Mᵀ + I`, `M` orthonormal `q × 3`, `D = 8(q/n) I₃` | none |
//! | 2 | `0.3·11ᵀ + S`, `S` block-diagonal with `B = 0.7·11ᵀ + 0.3 I₅` | within-block pairs of `S` |
//! | 3 | `M D Mᵀ + S` with the model-1 factors and the model-2 `S` | within-block pairs of `S` |
//! | 4 | `4·M Mᵀ + S`, `‖M‖ = 1`, `S_jj' = 0.7^|j−j'|` | path graph of `S⁻¹` |
//! | 5 | `4·M₁M₁ᵀ + 4·M₂M₂ᵀ + S`, complementary halves, model-2 `S` | 5-cliques of `S⁻¹` |
//! | 6 | `4·M Mᵀ + C⁻¹`, `C = I + w·A` on a ring of 4-cycles | ring edges of `C` |

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::ObservationMatrix;
use crate::error::{Error, Result};
use crate::graphs::UndirectedGraph;
use crate::io::matrix_serde;
use crate::linalg::{cholesky_jittered, spd_inverse, symmetrize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub model_id: u8,
    pub q: usize,
    pub n: usize,
    pub seed: u64,
}

impl SimulationSpec {
    pub fn new(model_id: u8, q: usize, n: usize, seed: u64) -> Self {
        SimulationSpec {
            model_id,
            q,
            n,
            seed,
        }
    }

    /// Generator seeded from `seed`.
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    pub fn validate(&self) -> Result<()> {
        let SimulationSpec { model_id, q, n, .. } = *self;
        if n == 0 {
            return Err(Error::Config("n must be positive".into()));
        }
        let ok = match model_id {
            1..=3 => q >= 5 && q % 5 == 0,
            4 => q >= 2,
            5 => q >= 10 && q % 10 == 0,
            6 => q >= 6 && q % 3 == 0,
            _ => return Err(Error::Config(format!("model_id must be 1..=6, got {model_id}"))),
        };
        if !ok {
            let need = match model_id {
                1..=3 => "a positive multiple of 5",
                4 => "at least 2",
                5 => "a positive multiple of 10",
                _ => "a multiple of 3 and at least 6",
            };
            return Err(Error::Config(format!("model {model_id} needs q {need}, got {q}")));
        }
        Ok(())
    }
}

/// Whether the truth support lives in the covariance or the precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SupportKind {
    Covariance,
    Precision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub spec: SimulationSpec,
    #[serde(with = "matrix_serde")]
    pub sigma: DMatrix<f64>,
    #[serde(with = "matrix_serde")]
    pub low_rank: DMatrix<f64>,
    /// Residual covariance `S`.
    #[serde(with = "matrix_serde")]
    pub sparse: DMatrix<f64>,
    /// Residual precision, present for the graphical models.
    #[serde(with = "matrix_serde::option", default)]
    pub precision: Option<DMatrix<f64>>,
    pub rank: usize,
    pub support_kind: SupportKind,
    /// Strict-upper pairs `(i, j)`, `i < j`.
    pub support: Vec<(usize, usize)>,
}

impl GroundTruth {
    pub fn support_set(&self) -> super::Support {
        self.support.iter().copied().collect()
    }
}

fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn orthonormal_columns<R: Rng + ?Sized>(q: usize, k: usize, rng: &mut R) -> DMatrix<f64> {
    // modified Gram–Schmidt, redrawing a column in the (measure-zero) degenerate case
    let mut m = gaussian_matrix(q, k, rng);
    for c in 0..k {
        loop {
            for prev in 0..c {
                let proj = m.column(prev).dot(&m.column(c));
                let p = m.column(prev).clone_owned();
                m.column_mut(c).axpy(-proj, &p, 1.0);
            }
            let norm = m.column(c).norm();
            if norm > 1e-8 {
                m.column_mut(c).scale_mut(1.0 / norm);
                break;
            }
            for i in 0..q {
                m[(i, c)] = rng.sample(StandardNormal);
            }
        }
    }
    m
}

fn unit_vector<R: Rng + ?Sized>(q: usize, rng: &mut R) -> DMatrix<f64> {
    orthonormal_columns(q, 1, rng)
}

fn block_diagonal(q: usize) -> DMatrix<f64> {
    DMatrix::from_fn(q, q, |i, j| {
        if i == j {
            1.0
        } else if i / 5 == j / 5 {
            0.7
        } else {
            0.0
        }
    })
}

fn block_pairs(q: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..q {
        for j in (i + 1)..q {
            if i / 5 == j / 5 {
                out.push((i, j));
            }
        }
    }
    out
}

/// `q = 3m` vertices arranged as `m` four-cycles in a ring; consecutive
/// cycles share one vertex. Cycle `k` is `3k – 3k+1 – 3(k+1) – 3k+2 – 3k`,
/// indices mod `q`. For `q = 30` this has 40 edges and is not chordal.
pub fn ring_of_four_cycles(q: usize) -> Result<UndirectedGraph> {
    if q < 6 || q % 3 != 0 {
        return Err(Error::Config(format!(
            "ring of four-cycles needs q a multiple of 3 and at least 6, got {q}"
        )));
    }
    let m = q / 3;
    let mut edges = Vec::with_capacity(4 * m);
    for k in 0..m {
        let s0 = 3 * k;
        let s1 = (3 * (k + 1)) % q;
        let (a, b) = (3 * k + 1, 3 * k + 2);
        edges.extend([(s0, a), (a, s1), (s1, b), (b, s0)]);
    }
    UndirectedGraph::from_edges(q, edges)
}

fn low_rank_from(loadings: &DMatrix<f64>, variances: &[f64]) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(loadings.nrows(), loadings.nrows());
    for (k, &v) in variances.iter().enumerate() {
        let m = loadings.column(k);
        l.ger(v, &m, &m, 1.0);
    }
    symmetrize(&mut l);
    l
}

/// Draws `n` columns from `N_q(0, Σ_true)` for the requested model.
pub fn simulate<R: Rng + ?Sized>(
    spec: &SimulationSpec,
    rng: &mut R,
) -> Result<(ObservationMatrix, GroundTruth)> {
    spec.validate()?;
    let SimulationSpec { model_id, q, n, .. } = *spec;
    let qn = q as f64 / n as f64;

    let (low_rank, sparse, precision, rank, support_kind, support) = match model_id {
        1 => {
            let m = orthonormal_columns(q, 3, rng);
            let l = low_rank_from(&m, &[8.0 * qn; 3]);
            (l, DMatrix::identity(q, q), None, 3, SupportKind::Covariance, vec![])
        }
        2 => {
            let l = DMatrix::from_element(q, q, 0.3);
            let s = block_diagonal(q);
            (l, s, None, 1, SupportKind::Covariance, block_pairs(q))
        }
        3 => {
            let m = orthonormal_columns(q, 3, rng);
            let l = low_rank_from(&m, &[8.0 * qn; 3]);
            (l, block_diagonal(q), None, 3, SupportKind::Covariance, block_pairs(q))
        }
        4 => {
            let m = unit_vector(q, rng);
            let l = low_rank_from(&m, &[4.0]);
            let s = DMatrix::from_fn(q, q, |i, j| 0.7f64.powi((i as i32 - j as i32).abs()));
            let g = UndirectedGraph::path(q);
            let c = masked_inverse(&s, &g)?;
            (l, s, Some(c), 1, SupportKind::Precision, g.edges())
        }
        5 => {
            let half = q / 2;
            let mut m = DMatrix::zeros(q, 2);
            let a = unit_vector(half, rng);
            let b = unit_vector(q - half, rng);
            for i in 0..half {
                m[(i, 0)] = a[(i, 0)];
            }
            for i in half..q {
                m[(i, 1)] = b[(i - half, 0)];
            }
            let l = low_rank_from(&m, &[4.0, 4.0]);
            let s = block_diagonal(q);
            let pairs = block_pairs(q);
            let g = UndirectedGraph::from_edges(q, pairs.iter().copied())?;
            let c = masked_inverse(&s, &g)?;
            (l, s, Some(c), 2, SupportKind::Precision, pairs)
        }
        6 => {
            let m = unit_vector(q, rng);
            let l = low_rank_from(&m, &[4.0]);
            let g = ring_of_four_cycles(q)?;
            let mut adj = DMatrix::<f64>::zeros(q, q);
            for (i, j) in g.edges() {
                adj[(i, j)] = 1.0;
                adj[(j, i)] = 1.0;
            }
            let lam_min = adj.clone().symmetric_eigen().eigenvalues.min();
            let w = if lam_min < 0.0 {
                0.3f64.min(0.95 / -lam_min)
            } else {
                0.3
            };
            let c = DMatrix::identity(q, q) + adj * w;
            let (mut s, _) = spd_inverse(&c)?;
            symmetrize(&mut s);
            (l, s, Some(c), 1, SupportKind::Precision, g.edges())
        }
        _ => unreachable!("validated above"),
    };

    let mut sigma = &low_rank + &sparse;
    symmetrize(&mut sigma);
    let chol = cholesky_jittered(&sigma)?;
    if chol.jittered {
        return Err(Error::NotSpd(format!("model {model_id} covariance")));
    }
    let z = gaussian_matrix(q, n, rng);
    let data = chol.chol.l() * z;

    let truth = GroundTruth {
        spec: *spec,
        sigma,
        low_rank,
        sparse,
        precision,
        rank,
        support_kind,
        support,
    };
    Ok((ObservationMatrix::new(data)?, truth))
}

/// Inverse of `s` with entries off the graph set to exact zeros (they are
/// zero in exact arithmetic for the graphical models).
fn masked_inverse(s: &DMatrix<f64>, g: &UndirectedGraph) -> Result<DMatrix<f64>> {
    let (mut c, _) = spd_inverse(s)?;
    let q = s.nrows();
    for i in 0..q {
        for j in 0..q {
            if i != j && !g.has_edge(i, j) {
                c[(i, j)] = 0.0;
            }
        }
    }
    symmetrize(&mut c);
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::is_decomposable;
    use crate::linalg::is_spd;

    #[test]
    fn unknown_model_rejected() {
        let spec = SimulationSpec::new(7, 10, 10, 1);
        assert!(matches!(simulate(&spec, &mut spec.rng()), Err(Error::Config(_))));
        let spec = SimulationSpec::new(1, 12, 10, 1);
        assert!(simulate(&spec, &mut spec.rng()).is_err());
    }

    #[test]
    fn ring_is_not_chordal() {
        let g = ring_of_four_cycles(30).unwrap();
        assert_eq!(g.edge_count(), 40);
        assert!(!is_decomposable(&g));
        assert!(g.neighbors(0).count() == 4 && g.neighbors(1).count() == 2);
    }

    #[test]
    fn every_model_is_spd() {
        for (model, q) in [(1, 20), (2, 20), (3, 20), (4, 30), (5, 30), (6, 30)] {
            let spec = SimulationSpec::new(model, q, 100, 3);
            let (y, t) = simulate(&spec, &mut spec.rng()).unwrap();
            assert_eq!((y.q(), y.n()), (q, 100));
            assert!(is_spd(&t.sigma), "model {model}");
        }
    }

    #[test]
    fn model_four_ar1_entry() {
        let spec = SimulationSpec::new(4, 30, 100, 9);
        let (_, t) = simulate(&spec, &mut spec.rng()).unwrap();
        assert!((t.sparse[(0, 4)] - 0.2401).abs() < 1e-12);
        assert_eq!(t.support, UndirectedGraph::path(30).edges());
    }
}
