//! Model parameters, hyperparameters and the data container.

mod metrics;
mod simulate;

pub use metrics::{matrix_losses, support_from_matrix, support_metrics, Losses, Support};
pub use simulate::{ring_of_four_cycles, simulate, GroundTruth, SimulationSpec, SupportKind};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which residual model is attached to the factor block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Sparse covariance residual with point-mass lasso prior.
    Lrsd,
    /// Decomposable graph with a hyper-inverse-Wishart residual covariance.
    GfmHiw,
    /// Sparse precision residual with point-mass graphical-lasso prior.
    GfmLasso,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Lrsd => "lrsd",
            Variant::GfmHiw => "gfm-hiw",
            Variant::GfmLasso => "gfm-lasso",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lrsd" => Ok(Variant::Lrsd),
            "gfm-hiw" | "hiw" => Ok(Variant::GfmHiw),
            "gfm-lasso" | "lasso" => Ok(Variant::GfmLasso),
            other => Err(Error::Config(format!(
                "unknown variant '{other}' (expected lrsd, gfm-hiw or gfm-lasso)"
            ))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `q × n` data, one variable per row and one sample per column.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationMatrix {
    data: DMatrix<f64>,
}

impl ObservationMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::Validation("data matrix is empty".into()));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            let (i, j) = (pos % data.nrows(), pos / data.nrows());
            return Err(Error::Validation(format!("non-finite value at ({i}, {j})")));
        }
        Ok(ObservationMatrix { data })
    }

    pub fn q(&self) -> usize {
        self.data.nrows()
    }

    pub fn n(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.data
    }

    /// Copy with every variable shifted to zero sample mean.
    pub fn centered(&self) -> ObservationMatrix {
        let mut d = self.data.clone();
        for mut row in d.row_iter_mut() {
            let m = row.mean();
            row.add_scalar_mut(-m);
        }
        ObservationMatrix { data: d }
    }

    /// Unbiased sample covariance (divides by `n − 1`, mean removed).
    pub fn sample_covariance(&self) -> DMatrix<f64> {
        let c = self.centered();
        let denom = (self.n().max(2) - 1) as f64;
        &c.data * c.data.transpose() / denom
    }
}

/// Prior hyperparameters. See [`Hyperparameters::defaults`] for the values
/// used when a config file leaves them out.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparameters {
    /// Number of candidate factors.
    pub r: usize,
    pub a_p: f64,
    pub b_p: f64,
    pub a_pi: f64,
    pub b_pi: f64,
    pub a_tau: f64,
    pub b_tau: f64,
    pub a_lambda: f64,
    pub b_lambda: f64,
    pub a_rho: f64,
    pub b_rho: f64,
    /// HIW degrees of freedom `δ`.
    pub delta: f64,
    /// HIW scale `Φ`.
    pub phi: DMatrix<f64>,
    /// Upper end of the uniform prior on the graph-size exponent.
    pub xi_max: f64,
}

impl Hyperparameters {
    /// Defaults for `q` variables and the given residual model:
    /// `r = min(q, 10)`, `(a_π, b_π) = (1/q, 1 − 1/q)`, `(a_p, b_p) = (1, r)`,
    /// `(a_τ, b_τ) = (1, 1)`, `(a_λ, b_λ) = (1, 1)`, `δ = 3`, `Φ = I`,
    /// `ξ_max = 5`; `(a_ρ, b_ρ)` is `(0.5, 0.5)` except for the precision
    /// lasso, which uses `(1, q)`.
    pub fn defaults(q: usize, variant: Variant) -> Self {
        let r = q.min(10);
        let qf = q as f64;
        let (a_rho, b_rho) = match variant {
            Variant::GfmLasso => (1.0, qf),
            _ => (0.5, 0.5),
        };
        Hyperparameters {
            r,
            a_p: 1.0,
            b_p: r as f64,
            a_pi: 1.0 / qf,
            b_pi: 1.0 - 1.0 / qf,
            a_tau: 1.0,
            b_tau: 1.0,
            a_lambda: 1.0,
            b_lambda: 1.0,
            a_rho,
            b_rho,
            delta: 3.0,
            phi: DMatrix::identity(q, q),
            xi_max: 5.0,
        }
    }

    pub fn validate(&self, q: usize) -> Result<()> {
        let positives = [
            ("a_p", self.a_p),
            ("b_p", self.b_p),
            ("a_pi", self.a_pi),
            ("b_pi", self.b_pi),
            ("a_tau", self.a_tau),
            ("b_tau", self.b_tau),
            ("a_lambda", self.a_lambda),
            ("b_lambda", self.b_lambda),
            ("a_rho", self.a_rho),
            ("b_rho", self.b_rho),
            ("delta", self.delta),
            ("xi_max", self.xi_max),
        ];
        for (name, v) in positives {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.r == 0 || self.r > q {
            return Err(Error::Config(format!("r must lie in 1..={q}, got {}", self.r)));
        }
        if self.phi.nrows() != q || self.phi.ncols() != q {
            return Err(Error::Dimension(format!("Phi must be {q}x{q}")));
        }
        Ok(())
    }
}

/// Loadings, scores, indicators and factor variances.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorState {
    /// `q × r` loadings `M`.
    pub loadings: DMatrix<f64>,
    /// `r × n` factor scores `f`.
    pub scores: DMatrix<f64>,
    pub indicators: Vec<bool>,
    /// `τ²_k`.
    pub variances: Vec<f64>,
    /// `p_k`.
    pub inclusion_probs: Vec<f64>,
    pub pi: f64,
}

impl FactorState {
    /// Number of active factors, `Σ z_k`.
    pub fn rank(&self) -> usize {
        self.indicators.iter().filter(|&&z| z).count()
    }

    pub fn r(&self) -> usize {
        self.indicators.len()
    }

    /// `M · diag(z) · diag(τ²) · Mᵀ`.
    pub fn low_rank(&self) -> DMatrix<f64> {
        let q = self.loadings.nrows();
        let mut l = DMatrix::zeros(q, q);
        for k in 0..self.r() {
            if self.indicators[k] {
                let m = self.loadings.column(k);
                l.ger(self.variances[k], &m, &m, 1.0);
            }
        }
        crate::linalg::symmetrize(&mut l);
        l
    }

    /// `M Z f`, the factor part of the mean of the data.
    pub fn signal(&self) -> DMatrix<f64> {
        let q = self.loadings.nrows();
        let n = self.scores.ncols();
        let mut out = DMatrix::zeros(q, n);
        for k in 0..self.r() {
            if self.indicators[k] {
                out.ger(1.0, &self.loadings.column(k), &self.scores.row(k).transpose(), 1.0);
            }
        }
        out
    }
}

/// Sparse residual covariance with its lasso hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseState {
    pub s: DMatrix<f64>,
    pub lambda: f64,
    /// Selection probabilities; only the strict upper triangle is used.
    pub rho: DMatrix<f64>,
}

/// Sparse residual precision with its graphical-lasso hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionState {
    pub c: DMatrix<f64>,
    pub lambda_c: f64,
    pub rho_c: DMatrix<f64>,
}

/// `Σ = M Z D_τ Mᵀ + S`.
pub fn assemble_sigma(factor: &FactorState, sparse: &SparseState) -> Result<DMatrix<f64>> {
    let q = factor.loadings.nrows();
    if sparse.s.nrows() != q || sparse.s.ncols() != q {
        return Err(Error::Dimension(format!(
            "loadings have {q} rows but S is {}x{}",
            sparse.s.nrows(),
            sparse.s.ncols()
        )));
    }
    if factor.loadings.ncols() != factor.r() || factor.variances.len() != factor.r() {
        return Err(Error::Dimension("factor block sizes disagree".into()));
    }
    let mut sigma = factor.low_rank() + &sparse.s;
    crate::linalg::symmetrize(&mut sigma);
    Ok(sigma)
}
