//! Inverse-Wishart and hyper-inverse-Wishart laws.
//!
//! Parameterization: `IW(δ, Φ)` on `p × p` matrices has density
//!
//! ```text
//! p(S | δ, Φ) ∝ |S|^-(δ/2 + p) · exp(-tr(S⁻¹ Φ) / 2)
//! ```
//!
//! which is the usual inverse-Wishart with `ν = δ + p − 1` degrees of freedom
//! (`|S|^-(ν+p+1)/2`). Under this convention every clique marginal of
//! `HIW(G, δ, Φ)` is `IW(δ, Φ_P)` with the same `δ`, and the normalizer is
//!
//! ```text
//! h(δ, Φ) = |Φ/2|^((δ+p−1)/2) / Γ_p((δ+p−1)/2)
//! ```

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::graphs::{clique_decomposition, UndirectedGraph};
use crate::linalg::{block, cholesky_jittered, log_det_spd, principal, symmetrize};

/// `ln Γ_p(x) = p(p−1)/4 · ln π + Σ_{j=1..p} ln Γ(x + (1 − j)/2)`.
pub fn ln_multigamma(p: usize, x: f64) -> f64 {
    let pf = p as f64;
    let mut acc = pf * (pf - 1.0) / 4.0 * std::f64::consts::PI.ln();
    for j in 1..=p {
        acc += libm::lgamma(x + (1.0 - j as f64) / 2.0);
    }
    acc
}

/// `ln h(δ, Φ)` for a single `IW(δ, Φ)` block. Zero for an empty block.
pub fn log_iw_normalizer(dof: f64, scale: &DMatrix<f64>) -> Result<f64> {
    let p = scale.nrows();
    if p == 0 {
        return Ok(0.0);
    }
    let a = (dof + p as f64 - 1.0) / 2.0;
    let ld = log_det_spd(scale)? - p as f64 * std::f64::consts::LN_2;
    Ok(a * ld - ln_multigamma(p, a))
}

fn check_scale(dof: f64, scale: &DMatrix<f64>) -> Result<()> {
    if !(dof > 0.0 && dof.is_finite()) {
        return Err(Error::Domain(format!("inverse-Wishart dof must be > 0, got {dof}")));
    }
    if !scale.is_square() {
        return Err(Error::Dimension("scale matrix must be square".into()));
    }
    Ok(())
}

pub fn sample_inverse_wishart<R: Rng + ?Sized>(
    dof: f64,
    scale: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    check_scale(dof, scale)?;
    let p = scale.nrows();
    let nu = dof + p as f64 - 1.0;
    let u = cholesky_jittered(scale)?.chol.l();

    // Bartlett factor of Wishart(ν, I)
    let mut a = DMatrix::<f64>::zeros(p, p);
    for i in 0..p {
        let shape = (nu - i as f64) / 2.0;
        let g = Gamma::new(shape, 2.0).map_err(|e| Error::Domain(e.to_string()))?;
        a[(i, i)] = g.sample(rng).sqrt().max(f64::MIN_POSITIVE);
        for j in 0..i {
            a[(i, j)] = rng.sample(StandardNormal);
        }
    }
    // S = (U^-T A A^T U^-1)^-1 = (U A^-T)(U A^-T)^T
    let a_inv = a
        .solve_lower_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| Error::NotSpd("Bartlett factor".into()))?;
    let t = &u * a_inv.transpose();
    let mut s = &t * t.transpose();
    symmetrize(&mut s);
    Ok(s)
}

/// Clique-sequential draw from `HIW(G, δ, Φ)`.
///
/// The first clique is `IW(δ, Φ_P1)`. For each later clique with residual
/// `R = P \ Q` and separator `Q`:
///
/// * `S_{R·Q} ~ IW(δ + |Q|, Φ_{R·Q})`
/// * `S_RQ S_QQ⁻¹ ~ MN(Φ_RQ Φ_QQ⁻¹, S_{R·Q}, Φ_QQ⁻¹)`
///
/// and the entries linking `R` to earlier non-separator vertices are filled by
/// the Markov completion `S_{R,H} = S_RQ S_QQ⁻¹ S_{Q,H}`.
pub fn sample_hiw<R: Rng + ?Sized>(
    graph: &UndirectedGraph,
    dof: f64,
    scale: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    check_scale(dof, scale)?;
    let q = graph.vertex_count();
    if scale.nrows() != q {
        return Err(Error::Dimension(format!(
            "scale is {}x{}, graph has {q} vertices",
            scale.nrows(),
            scale.ncols()
        )));
    }
    let dec = clique_decomposition(graph)?;
    let mut s = DMatrix::<f64>::zeros(q, q);
    let mut history: Vec<usize> = Vec::with_capacity(q);

    for k in 0..dec.cliques.len() {
        let sep: &[usize] = if k == 0 { &[] } else { &dec.separators[k - 1] };
        let res = dec.residual(k);
        if sep.is_empty() {
            let block_draw = sample_inverse_wishart(dof, &principal(scale, &res), rng)?;
            for (a, &i) in res.iter().enumerate() {
                for (b, &j) in res.iter().enumerate() {
                    s[(i, j)] = block_draw[(a, b)];
                }
            }
        } else {
            let phi_rr = principal(scale, &res);
            let phi_rq = block(scale, &res, sep);
            let phi_qq = principal(scale, sep);
            let chol_qq = cholesky_jittered(&phi_qq)?.chol;
            // Φ_RQ Φ_QQ⁻¹
            let mean = chol_qq.solve(&phi_rq.transpose()).transpose();
            let mut phi_cond = &phi_rr - &mean * phi_rq.transpose();
            symmetrize(&mut phi_cond);

            let s_cond = sample_inverse_wishart(dof + sep.len() as f64, &phi_cond, rng)?;
            let l_row = cholesky_jittered(&s_cond)?.chol.l();
            let z = DMatrix::<f64>::from_fn(res.len(), sep.len(), |_, _| rng.sample(StandardNormal));
            // Z U_q⁻¹ with U_q U_q^T = Φ_QQ, so the column covariance is Φ_QQ⁻¹
            let u_q = chol_qq.l();
            let zt = u_q
                .transpose()
                .solve_upper_triangular(&z.transpose())
                .ok_or_else(|| Error::NotSpd("separator scale".into()))?;
            let coef = mean + l_row * zt.transpose();

            let s_qh = block(&s, sep, &history);
            let s_rh = &coef * s_qh;
            for (a, &i) in res.iter().enumerate() {
                for (b, &j) in history.iter().enumerate() {
                    s[(i, j)] = s_rh[(a, b)];
                    s[(j, i)] = s_rh[(a, b)];
                }
            }
            let s_qq = principal(&s, sep);
            let s_rr = s_cond + &coef * s_qq * coef.transpose();
            for (a, &i) in res.iter().enumerate() {
                for (b, &j) in res.iter().enumerate() {
                    s[(i, j)] = s_rr[(a, b)];
                }
            }
        }
        history.extend(res.iter().copied());
    }
    symmetrize(&mut s);
    Ok(s)
}

/// `ln h(G, δ, Φ)`: clique terms minus separator terms.
pub fn log_hiw_normalizer(
    graph: &UndirectedGraph,
    dof: f64,
    scale: &DMatrix<f64>,
) -> Result<f64> {
    check_scale(dof, scale)?;
    if scale.nrows() != graph.vertex_count() {
        return Err(Error::Dimension("scale does not match graph".into()));
    }
    let dec = clique_decomposition(graph)?;
    let mut acc = 0.0;
    for c in &dec.cliques {
        acc += log_iw_normalizer(dof, &principal(scale, c))?;
    }
    for sep in &dec.separators {
        if !sep.is_empty() {
            acc -= log_iw_normalizer(dof, &principal(scale, sep))?;
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::is_spd;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn multigamma_p1_is_lgamma() {
        assert!((ln_multigamma(1, 3.5) - libm::lgamma(3.5)).abs() < 1e-14);
    }

    #[test]
    fn iw_draws_are_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let phi = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.0, 0.2, 0.0, 0.2, 1.5]);
        for _ in 0..500 {
            assert!(is_spd(&sample_inverse_wishart(3.0, &phi, &mut rng).unwrap()));
        }
    }

    #[test]
    fn hiw_empty_graph_is_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g = UndirectedGraph::empty(4);
        let s = sample_hiw(&g, 3.0, &DMatrix::identity(4, 4), &mut rng).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert_eq!(s[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn bad_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert!(sample_inverse_wishart(0.0, &DMatrix::identity(2, 2), &mut rng).is_err());
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(sample_inverse_wishart(3.0, &bad, &mut rng).is_err());
        let mut cyc = UndirectedGraph::path(4);
        cyc.add_edge(0, 3);
        assert!(sample_hiw(&cyc, 3.0, &DMatrix::identity(4, 4), &mut rng).is_err());
        assert!(log_hiw_normalizer(&cyc, 3.0, &DMatrix::identity(4, 4)).is_err());
    }
}
