//! The ball ensemble.
//!
//! Every ball starts from a prior draw with a Gaussian velocity, is pushed by
//! the log-likelihood gradient through a semi-implicit Euler step, and keeps
//! the candidate with probability `min(1, exp(ℓ* − ℓ))` where
//! `ℓ = −ε v²/(2σ²) + log L(θ)`. A rejection keeps θ and redraws v; after
//! `stuck_lag_steps` consecutive rejections the ball is reseeded from the
//! prior. Each step records exactly one position.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{ScalarModel, Support};
use crate::priors::PriorSpec;

/// Prior draws attempted before giving up on landing inside the model support.
pub const MAX_SUPPORT_RETRIES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n_balls: usize,
    /// Time increment ε of the integrator.
    pub epsilon: f64,
    pub total_steps: usize,
    pub warmup_steps: usize,
    /// Noise strength σ²; acts as an inverse mass.
    pub sigma2: f64,
    /// Consecutive rejections after which a ball is reseeded.
    pub stuck_lag_steps: usize,
    pub seed: u64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_balls == 0 {
            return fail("n_balls must be positive".into());
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return fail(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.sigma2.is_finite() && self.sigma2 > 0.0) {
            return fail(format!("sigma2 must be positive, got {}", self.sigma2));
        }
        if self.total_steps == 0 {
            return fail("total_steps must be positive".into());
        }
        if self.warmup_steps >= self.total_steps {
            return fail(format!(
                "warmup_steps ({}) must be less than total_steps ({})",
                self.warmup_steps, self.total_steps
            ));
        }
        if self.stuck_lag_steps == 0 {
            return fail("stuck_lag_steps must be at least 1".into());
        }
        Ok(())
    }

    pub fn kept_per_ball(&self) -> usize {
        self.total_steps - self.warmup_steps
    }

    /// Converts a lag time τ into a step count, `round(τ/ε)` but at least one.
    pub fn lag_steps(tau: f64, epsilon: f64) -> usize {
        ((tau / epsilon).round() as usize).max(1)
    }
}

/// Independent random stream for one ball, derived from the root seed.
pub fn ball_stream(seed: u64, ball_id: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ball_id as u64);
    rng
}

#[derive(Debug, Clone)]
pub struct BallState {
    pub theta: f64,
    pub velocity: f64,
    pub rejections_in_a_row: usize,
    rng: ChaCha8Rng,
}

impl BallState {
    pub fn new(theta: f64, velocity: f64, rng: ChaCha8Rng) -> Self {
        BallState {
            theta,
            velocity,
            rejections_in_a_row: 0,
            rng,
        }
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

impl PartialEq for BallState {
    fn eq(&self, other: &Self) -> bool {
        self.theta.to_bits() == other.theta.to_bits()
            && self.velocity.to_bits() == other.velocity.to_bits()
            && self.rejections_in_a_row == other.rejections_in_a_row
            && self.rng == other.rng
    }
}

/// Position and velocity proposed by one integrator step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub theta: f64,
    pub velocity: f64,
}

fn draw_velocity<R: Rng + ?Sized>(rng: &mut R, sigma2: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    sigma2.sqrt() * z
}

fn draw_in_support<R: Rng + ?Sized>(
    prior: &PriorSpec,
    support: Support,
    rng: &mut R,
) -> Result<f64> {
    for _ in 0..MAX_SUPPORT_RETRIES {
        let x = prior.sample(rng)?;
        if support.contains(x) {
            return Ok(x);
        }
    }
    Err(Error::SupportExhausted(MAX_SUPPORT_RETRIES))
}

pub fn init_ball<M: ScalarModel + ?Sized>(
    prior: &PriorSpec,
    model: &M,
    config: &RunConfig,
    ball_id: usize,
) -> Result<BallState> {
    let mut rng = ball_stream(config.seed, ball_id);
    let theta = draw_in_support(prior, model.support(), &mut rng)?;
    let velocity = draw_velocity(&mut rng, config.sigma2);
    Ok(BallState::new(theta, velocity, rng))
}

/// One semi-implicit Euler step of `θ̈ = σ² ∂log L/∂θ`: velocity first, then
/// position with the updated velocity.
pub fn el_step<M: ScalarModel + ?Sized>(
    state: &BallState,
    model: &M,
    config: &RunConfig,
) -> Result<Candidate> {
    let grad = model.grad_log_lik(state.theta)?;
    if !grad.is_finite() {
        return Err(Error::NonFiniteGradient(state.theta));
    }
    let velocity = state.velocity + config.epsilon * config.sigma2 * grad;
    let theta = state.theta + config.epsilon * velocity;
    Ok(Candidate { theta, velocity })
}

/// `−ε v²/(2σ²) + log L(θ)`.
pub fn log_path_weight<M: ScalarModel + ?Sized>(
    theta: f64,
    velocity: f64,
    model: &M,
    config: &RunConfig,
) -> Result<f64> {
    let log_lik = model.log_lik(theta)?;
    Ok(path_weight_from(log_lik, velocity, config))
}

fn path_weight_from(log_lik: f64, velocity: f64, config: &RunConfig) -> f64 {
    -config.epsilon * velocity * velocity / (2.0 * config.sigma2) + log_lik
}

/// `min(1, exp(candidate − current))`, with NaN mapped to zero.
pub fn acceptance_probability(current_lw: f64, candidate_lw: f64) -> f64 {
    if candidate_lw.is_nan() || current_lw.is_nan() || candidate_lw == f64::NEG_INFINITY {
        return 0.0;
    }
    if candidate_lw >= current_lw {
        return 1.0;
    }
    (candidate_lw - current_lw).exp()
}

pub fn accept_candidate(current_lw: f64, candidate_lw: f64, u: f64) -> bool {
    u < acceptance_probability(current_lw, candidate_lw)
}

pub fn resample_velocity(state: &mut BallState, config: &RunConfig) {
    state.velocity = draw_velocity(&mut state.rng, config.sigma2);
}

fn reseed<M: ScalarModel + ?Sized>(
    state: &mut BallState,
    prior: &PriorSpec,
    model: &M,
    config: &RunConfig,
) -> Result<()> {
    state.theta = draw_in_support(prior, model.support(), &mut state.rng)?;
    resample_velocity(state, config);
    state.rejections_in_a_row = 0;
    Ok(())
}

/// Records a rejected (or out-of-support) candidate. Returns `true` when the
/// ball hit the stuck lag and was reseeded from the prior.
pub fn handle_rejection<M: ScalarModel + ?Sized>(
    state: &mut BallState,
    prior: &PriorSpec,
    model: &M,
    config: &RunConfig,
) -> Result<bool> {
    state.rejections_in_a_row += 1;
    if state.rejections_in_a_row >= config.stuck_lag_steps {
        reseed(state, prior, model, config)?;
        Ok(true)
    } else {
        resample_velocity(state, config);
        Ok(false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainOutput {
    pub ball_id: usize,
    /// Position after each step; entry `i` belongs to step `i + 1`.
    pub trajectory: Vec<f64>,
    pub acceptance_count: usize,
    pub reseed_count: usize,
}

impl ChainOutput {
    /// `(step, theta)` pairs with steps numbered from 1.
    pub fn samples(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.trajectory.iter().enumerate().map(|(i, &t)| (i + 1, t))
    }

    pub fn post_warmup(&self, warmup_steps: usize) -> &[f64] {
        &self.trajectory[warmup_steps.min(self.trajectory.len())..]
    }
}

/// Advances one ball through `total_steps` updates.
pub fn run_ball<M: ScalarModel + ?Sized>(
    ball_id: usize,
    model: &M,
    prior: &PriorSpec,
    config: &RunConfig,
) -> Result<ChainOutput> {
    let state = init_ball(prior, model, config, ball_id)?;
    run_from(state, ball_id, model, prior, config)
}

/// Runs the update loop from an explicit starting state.
pub fn run_from<M: ScalarModel + ?Sized>(
    mut state: BallState,
    ball_id: usize,
    model: &M,
    prior: &PriorSpec,
    config: &RunConfig,
) -> Result<ChainOutput> {
    config.validate()?;
    let support = model.support();
    let mut trajectory = Vec::with_capacity(config.total_steps);
    let mut acceptance_count = 0;
    let mut reseed_count = 0;
    let mut current_ll = model.log_lik(state.theta)?;

    for _ in 0..config.total_steps {
        let candidate = match el_step(&state, model, config) {
            Ok(c) => Some(c),
            Err(Error::NonFiniteGradient(_)) => None,
            Err(e) => return Err(e),
        };
        let moved = match candidate {
            // no force available: the ball is stuck where it is
            None => {
                reseed(&mut state, prior, model, config)?;
                reseed_count += 1;
                true
            }
            Some(c) => {
                let candidate_ll = if support.contains(c.theta) {
                    model.log_lik(c.theta).ok().filter(|ll| !ll.is_nan())
                } else {
                    None
                };
                match candidate_ll {
                    // likelihood undefined at the candidate
                    None => {
                        let reseeded = handle_rejection(&mut state, prior, model, config)?;
                        reseed_count += reseeded as usize;
                        reseeded
                    }
                    Some(ll) => {
                        let current_lw = path_weight_from(current_ll, state.velocity, config);
                        let candidate_lw = path_weight_from(ll, c.velocity, config);
                        let u: f64 = state.rng.random();
                        if accept_candidate(current_lw, candidate_lw, u) {
                            state.theta = c.theta;
                            state.velocity = c.velocity;
                            state.rejections_in_a_row = 0;
                            current_ll = ll;
                            acceptance_count += 1;
                            false
                        } else {
                            let reseeded = handle_rejection(&mut state, prior, model, config)?;
                            reseed_count += reseeded as usize;
                            reseeded
                        }
                    }
                }
            }
        };
        if moved {
            current_ll = model.log_lik(state.theta)?;
        }
        trajectory.push(state.theta);
    }

    Ok(ChainOutput {
        ball_id,
        trajectory,
        acceptance_count,
        reseed_count,
    })
}

/// Post-warmup draws of every ball, concatenated in ball order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledSample {
    pub values: Vec<f64>,
}

impl PooledSample {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct EnsembleOutput {
    pub pooled: PooledSample,
    pub chains: Vec<ChainOutput>,
    pub warmup_steps: usize,
    pub runtime_seconds: f64,
}

impl EnsembleOutput {
    pub fn post_warmup_chains(&self) -> Vec<&[f64]> {
        self.chains
            .iter()
            .map(|c| c.post_warmup(self.warmup_steps))
            .collect()
    }

    pub fn acceptance_rate(&self) -> f64 {
        let accepted: usize = self.chains.iter().map(|c| c.acceptance_count).sum();
        let steps: usize = self.chains.iter().map(|c| c.trajectory.len()).sum();
        accepted as f64 / steps.max(1) as f64
    }

    pub fn reseed_counts(&self) -> Vec<usize> {
        self.chains.iter().map(|c| c.reseed_count).collect()
    }
}

/// Runs every ball on the current rayon pool and pools the post-warmup draws
/// in ball order. Output does not depend on the pool size.
pub fn run_ensemble<M: ScalarModel + ?Sized>(
    model: &M,
    prior: &PriorSpec,
    config: &RunConfig,
) -> Result<EnsembleOutput> {
    config.validate()?;
    prior.validate()?;
    let start = Instant::now();
    let results: Vec<Result<ChainOutput>> = (0..config.n_balls)
        .into_par_iter()
        .map(|id| run_ball(id, model, prior, config))
        .collect();
    let mut chains = Vec::with_capacity(config.n_balls);
    for (ball_id, r) in results.into_iter().enumerate() {
        chains.push(r.map_err(|e| Error::Ball {
            ball_id,
            source: Box::new(e),
        })?);
    }
    let values = chains
        .iter()
        .flat_map(|c| c.post_warmup(config.warmup_steps).iter().copied())
        .collect();
    Ok(EnsembleOutput {
        pooled: PooledSample { values },
        chains,
        warmup_steps: config.warmup_steps,
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}
