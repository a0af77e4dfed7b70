//! Ensemble sampler that evolves prior-drawn "balls" under likelihood-driven
//! Lagrangian dynamics, keeping each move with a path-weight acceptance test.
//!
//! The crate is organized by concern:
//!
//! * [`models`]: scalar log-likelihoods with gradients (Bernoulli, Poisson,
//!   coordinate-wise Cauchy) and the Laplace mode finder.
//! * [`priors`]: starting and reseed distributions.
//! * [`engine`]: ball state, integrator, acceptance and the ensemble runner.
//! * [`diagnostics`]: posterior summaries, ESS, split R-hat, trajectory action.
//! * [`oracle`]: conjugate posteriors and a random-walk Metropolis reference.

pub mod diagnostics;
pub mod engine;
pub mod error;
pub mod models;
pub mod oracle;
pub mod priors;

pub use diagnostics::{summarize, trajectory_action, PosteriorSummary, Quantiles, QUANTILE_LEVELS};
pub use engine::{
    accept_candidate, el_step, handle_rejection, init_ball, log_path_weight, resample_velocity,
    run_ball, run_ensemble, BallState, Candidate, ChainOutput, EnsembleOutput, PooledSample,
    RunConfig,
};
pub use error::{Error, Result};
pub use models::{
    bernoulli_model, cauchy_eta_model, cauchy_mu_model, laplace_mode, poisson_model,
    BernoulliModel, CauchyEtaModel, CauchyMuModel, CauchyParams, Dataset, PoissonModel,
    ScalarModel, Support,
};
pub use oracle::{
    analytic_quantiles, conjugate_posterior, rw_metropolis, AnalyticPosterior, MHConfig,
};
pub use priors::PriorSpec;
