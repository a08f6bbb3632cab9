//! MCMC samplers for the three residual models.
//!
//! Each iteration runs the factor block (loadings, then each indicator with
//! its scores integrated out followed by the scores themselves, inclusion
//! probabilities, factor variances), recomputes `Λ`, and then the residual
//! block of the chosen variant:
//!
//! * `lrsd`: diagonal of `S`, off-diagonals of `S`, `λ`, `ρ`;
//! * `gfm-hiw`: collapsed edge toggles on `G`, `S | G`, `ξ`;
//! * `gfm-lasso`: diagonal of `C`, off-diagonals of `C`, `λ^C`, `ρ^C`.

mod chain;
pub mod factor;
pub mod graph;
pub mod offdiag;
pub mod precision;
pub mod sparse;

pub use chain::{
    fit, fit_from_state, fit_with_observer, gibbs_sweep, initial_state, run_chain, run_gfm_chain, ChainConfig, ChainState,
    GfmOptions, GfmVariant, Residual, SweepSettings,
};
pub use factor::{
    factor_sweep, indicator_probability, pi_star, residual_scatter, score_conditional,
    update_factor_variances, update_inclusion_probs, update_indicators,
    update_indicators_and_scores, update_loadings, update_scores, ScoreConditional,
};
pub use graph::{
    graph_log_posterior, update_graph, update_graph_moves, update_s_hiw, update_xi, DofMode,
    GraphMoveOptions, GraphState, RwConfig, XiNormalizer,
};
pub use precision::{
    precision_pair_target, update_c_diagonal, update_c_offdiagonal, update_lambda_c,
    update_rho_c, PrecisionPairTerms,
};
pub use sparse::{
    lambda_conditional, pair_target, update_lambda, update_rho, update_sparse_diagonal,
    update_sparse_offdiagonal, PairTerms,
};
