//! Run configuration read from a single TOML file.
//!
//! ```toml
//! [simulation]
//! model = 1
//! q = 20
//! n = 50
//! seed = 7
//!
//! [hyper]          # every key optional; defaults depend on q and the variant
//! r = 10
//! a_rho = 0.5
//!
//! [chain]
//! burn_in = 2000
//! samples = 4000
//! thin = 2
//! grid_count = 100
//! seed = 1
//!
//! [fit]
//! variant = "lrsd"          # lrsd | gfm-hiw | gfm-lasso
//! dof_mode = "conjugate"    # conjugate | literal
//! hastings_exact = false
//! fdr = 0.2
//! trace_format = "csv"      # csv | binary
//!
//! [study]
//! base_seed = 1
//! threads = 1
//! [[study.cells]]
//! model = 1
//! q = 20
//! n = 50
//! replicates = 20
//! variant = "lrsd"
//! ```

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::TraceFormat;
use crate::model::{Hyperparameters, SimulationSpec, Variant};
use crate::sampler::{ChainConfig, DofMode, GfmOptions, RwConfig};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub simulation: Option<SimulationSection>,
    #[serde(default)]
    pub hyper: HyperSection,
    #[serde(default)]
    pub chain: ChainSection,
    #[serde(default)]
    pub fit: FitSection,
    pub study: Option<StudySection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub model: Option<u8>,
    pub q: Option<usize>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
}

impl SimulationSection {
    pub fn spec(&self) -> Result<SimulationSpec> {
        let model = self
            .model
            .ok_or_else(|| Error::Config("simulation.model is required".into()))?;
        let (q, n) = match model {
            1..=3 => (self.q.unwrap_or(50), self.n.unwrap_or(50)),
            4 => (self.q.unwrap_or(30), self.n.unwrap_or(100)),
            _ => (self.q.unwrap_or(30), self.n.unwrap_or(300)),
        };
        let spec = SimulationSpec::new(model, q, n, self.seed.unwrap_or(0));
        spec.validate()?;
        Ok(spec)
    }
}

/// Overrides on top of [`Hyperparameters::defaults`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperSection {
    pub r: Option<usize>,
    pub a_p: Option<f64>,
    pub b_p: Option<f64>,
    pub a_pi: Option<f64>,
    pub b_pi: Option<f64>,
    pub a_tau: Option<f64>,
    pub b_tau: Option<f64>,
    pub a_lambda: Option<f64>,
    pub b_lambda: Option<f64>,
    pub a_rho: Option<f64>,
    pub b_rho: Option<f64>,
    pub delta: Option<f64>,
    /// `Φ = phi_scale · I`.
    pub phi_scale: Option<f64>,
    pub xi_max: Option<f64>,
}

impl HyperSection {
    pub fn resolve(&self, q: usize, variant: Variant) -> Result<Hyperparameters> {
        let mut h = Hyperparameters::defaults(q, variant);
        if let Some(r) = self.r {
            h.r = r;
            // b_p follows r unless set explicitly
            h.b_p = r as f64;
        }
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { h.$f = v; } )* };
        }
        take!(a_p, b_p, a_pi, b_pi, a_tau, b_tau, a_lambda, b_lambda, a_rho, b_rho, delta, xi_max);
        if let Some(c) = self.phi_scale {
            if !(c > 0.0) {
                return Err(Error::Config(format!("phi_scale must be positive, got {c}")));
            }
            h.phi = DMatrix::identity(q, q) * c;
        }
        h.validate(q)?;
        Ok(h)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    pub burn_in: Option<usize>,
    pub samples: Option<usize>,
    pub thin: Option<usize>,
    pub grid_count: Option<usize>,
    pub seed: Option<u64>,
    pub check_invariants: Option<bool>,
}

impl ChainSection {
    pub fn resolve(&self) -> Result<ChainConfig> {
        let d = ChainConfig::default();
        let c = ChainConfig {
            burn_in: self.burn_in.unwrap_or(d.burn_in),
            samples: self.samples.unwrap_or(d.samples),
            thin: self.thin.unwrap_or(d.thin),
            grid_count: self.grid_count.unwrap_or(d.grid_count),
            seed: self.seed.unwrap_or(d.seed),
            check_invariants: self.check_invariants.unwrap_or(false),
            progress: false,
        };
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    pub variant: Option<Variant>,
    pub dof_mode: Option<String>,
    pub hastings_exact: Option<bool>,
    pub graph_moves: Option<usize>,
    pub sigma_xi: Option<f64>,
    pub fdr: Option<f64>,
    pub trace_format: Option<String>,
}

impl FitSection {
    pub fn variant(&self) -> Variant {
        self.variant.unwrap_or(Variant::Lrsd)
    }

    pub fn gfm_options(&self) -> Result<GfmOptions> {
        let dof = match &self.dof_mode {
            Some(s) => s.parse::<DofMode>()?,
            None => DofMode::Conjugate,
        };
        let sigma_xi = self.sigma_xi.unwrap_or(RwConfig::default().sigma_xi);
        if !(sigma_xi > 0.0) {
            return Err(Error::Config(format!("sigma_xi must be positive, got {sigma_xi}")));
        }
        Ok(GfmOptions {
            dof,
            hastings_exact: self.hastings_exact.unwrap_or(false),
            graph_moves: self.graph_moves,
            rw: RwConfig { sigma_xi },
        })
    }

    pub fn fdr(&self) -> Result<f64> {
        let f = self.fdr.unwrap_or(0.2);
        check_fdr(f)?;
        Ok(f)
    }

    pub fn trace_format(&self) -> Result<TraceFormat> {
        match self.trace_format.as_deref() {
            None | Some("csv") => Ok(TraceFormat::Csv),
            Some("binary") => Ok(TraceFormat::Binary),
            Some(other) => Err(Error::Config(format!("unknown trace format '{other}'"))),
        }
    }
}

pub fn check_fdr(f: f64) -> Result<()> {
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::Config(format!("fdr target must lie in (0, 1), got {f}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    pub base_seed: Option<u64>,
    pub threads: Option<usize>,
    #[serde(default)]
    pub cells: Vec<CellSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSection {
    pub model: u8,
    pub q: usize,
    pub n: usize,
    pub replicates: usize,
    pub variant: Option<Variant>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Ok((Self::parse(&text)?, text))
    }

    /// Canonical text of the effective configuration, hashed into provenance.
    pub fn canonical(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }
}
