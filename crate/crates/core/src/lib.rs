//! Bayesian estimation of covariance matrices of the form `Σ = L + S`, with
//! `L` low rank (latent factors) and `S` sparse, plus the graphical factor
//! models where the residual is Markov on a graph.

pub mod cli;
pub mod config;
pub mod distributions;
pub mod error;
pub mod graphs;
pub mod io;
pub mod linalg;
pub mod model;
pub mod posterior;
pub mod sampler;
pub mod study;

pub use error::{Error, Result};
