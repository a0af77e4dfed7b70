//! Reference posteriors used to check the sampler: closed-form conjugate
//! updates and a random-walk Metropolis chain for targets without one.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::gamma_lr;

use crate::diagnostics::{PosteriorSummary, Quantiles, QUANTILE_LEVELS};
use crate::engine::{ball_stream, PooledSample};
use crate::error::{Error, Result};
use crate::models::Dataset;
use crate::priors::PriorSpec;

const QUANTILE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum AnalyticPosterior {
    Beta { a: f64, b: f64 },
    Gamma { shape: f64, rate: f64 },
}

impl AnalyticPosterior {
    pub fn mean(&self) -> f64 {
        match *self {
            AnalyticPosterior::Beta { a, b } => a / (a + b),
            AnalyticPosterior::Gamma { shape, rate } => shape / rate,
        }
    }

    pub fn sd(&self) -> f64 {
        match *self {
            AnalyticPosterior::Beta { a, b } => {
                let s = a + b;
                (a * b / (s * s * (s + 1.0))).sqrt()
            }
            AnalyticPosterior::Gamma { shape, rate } => shape.sqrt() / rate,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            AnalyticPosterior::Beta { a, b } => {
                if x <= 0.0 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else {
                    beta_reg(a, b, x)
                }
            }
            AnalyticPosterior::Gamma { shape, rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    gamma_lr(shape, rate * x)
                }
            }
        }
    }

    /// Inverse CDF by bisection to an absolute tolerance of 1e-10.
    pub fn quantile(&self, p: f64) -> f64 {
        let (mut lo, mut hi) = match *self {
            AnalyticPosterior::Beta { .. } => (0.0, 1.0),
            AnalyticPosterior::Gamma { .. } => {
                let mut hi = self.mean() + 10.0 * self.sd();
                while self.cdf(hi) < p {
                    hi *= 2.0;
                }
                (0.0, hi)
            }
        };
        for _ in 0..200 {
            if hi - lo <= QUANTILE_TOL {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn summary(&self) -> PosteriorSummary {
        PosteriorSummary {
            mean: self.mean(),
            mcse: 0.0,
            sd: self.sd(),
            quantiles: Quantiles::from_slice(&analytic_quantiles(self, &QUANTILE_LEVELS)),
            ess: None,
            rhat: None,
            n: 0,
            runtime_seconds: 0.0,
        }
    }
}

pub fn analytic_quantiles(post: &AnalyticPosterior, probs: &[f64]) -> Vec<f64> {
    probs.iter().map(|&p| post.quantile(p)).collect()
}

/// Closed-form posterior for Bernoulli + Beta (uniform on `[0, 1]` counts as
/// Beta(1, 1)) and Poisson + Jeffreys.
///
/// The Jeffreys truncation used for starting points is ignored here.
pub fn conjugate_posterior(
    model_label: &str,
    prior: &PriorSpec,
    data: &Dataset,
) -> Result<AnalyticPosterior> {
    let s = data.sum();
    let n = data.n() as f64;
    let prior = match *prior {
        PriorSpec::Uniform { lo, hi } if lo == 0.0 && hi == 1.0 => {
            PriorSpec::Beta { a: 1.0, b: 1.0 }
        }
        p => p,
    };
    match (model_label, &prior) {
        ("bernoulli", PriorSpec::Beta { a, b }) => Ok(AnalyticPosterior::Beta {
            a: a + s,
            b: b + n - s,
        }),
        ("poisson", PriorSpec::JeffreysPoisson { .. }) => Ok(AnalyticPosterior::Gamma {
            shape: s + 0.5,
            rate: n,
        }),
        _ => Err(Error::NoConjugateForm {
            model: model_label.to_string(),
            prior: prior.to_string(),
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MHConfig {
    pub proposal_sd: f64,
    /// Total iterations, warmup included.
    pub steps: usize,
    pub warmup: usize,
    pub seed: u64,
}

impl MHConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.proposal_sd.is_finite() && self.proposal_sd > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "proposal_sd must be positive, got {}",
                self.proposal_sd
            )));
        }
        if self.warmup >= self.steps {
            return Err(Error::InvalidConfig(format!(
                "warmup ({}) must be less than steps ({})",
                self.warmup, self.steps
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MHOutput {
    pub draws: PooledSample,
    pub acceptance_rate: f64,
}

/// Gaussian random-walk Metropolis on a scalar log density.
pub fn rw_metropolis<F>(log_post: F, init: f64, cfg: &MHConfig) -> Result<MHOutput>
where
    F: Fn(f64) -> f64,
{
    run_chain(&log_post, init, cfg, ball_stream(cfg.seed, 0))
}

/// Independent chains on substreams `0..n_chains` of `cfg.seed`; chain `k`
/// equals a single-chain run seeded on stream `k`.
pub fn rw_metropolis_chains<F>(
    log_post: F,
    init: f64,
    cfg: &MHConfig,
    n_chains: usize,
) -> Result<Vec<MHOutput>>
where
    F: Fn(f64) -> f64 + Sync,
{
    (0..n_chains)
        .into_par_iter()
        .map(|k| run_chain(&log_post, init, cfg, ball_stream(cfg.seed, k)))
        .collect()
}

fn run_chain<F>(log_post: &F, init: f64, cfg: &MHConfig, mut rng: ChaCha8Rng) -> Result<MHOutput>
where
    F: Fn(f64) -> f64,
{
    cfg.validate()?;
    let mut x = init;
    let mut lp = log_post(x);
    if !lp.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "log posterior is not finite at the initial point {init}"
        )));
    }
    let mut values = Vec::with_capacity(cfg.steps - cfg.warmup);
    let mut accepted = 0usize;
    for step in 0..cfg.steps {
        let z: f64 = StandardNormal.sample(&mut rng);
        let y = x + cfg.proposal_sd * z;
        let lp_y = log_post(y);
        let u: f64 = rng.random();
        if lp_y.is_finite() && u.ln() < lp_y - lp {
            x = y;
            lp = lp_y;
            accepted += 1;
        }
        if step >= cfg.warmup {
            values.push(x);
        }
    }
    Ok(MHOutput {
        draws: PooledSample { values },
        acceptance_rate: accepted as f64 / cfg.steps as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn bern(successes: usize, n: usize) -> Dataset {
        Dataset::new((0..n).map(|i| (i < successes) as u8 as f64).collect()).unwrap()
    }

    #[test]
    fn beta_conjugate_update() {
        let d = bern(60, 200);
        let p = conjugate_posterior("bernoulli", &PriorSpec::Beta { a: 1.0, b: 1.0 }, &d).unwrap();
        assert_eq!(p, AnalyticPosterior::Beta { a: 61.0, b: 141.0 });
        assert_relative_eq!(p.mean(), 61.0 / 202.0);
        assert!((p.mean() - 0.30198).abs() < 5e-6);
        assert!((p.sd() - 0.03223).abs() < 1e-5);

        let p = conjugate_posterior("bernoulli", &PriorSpec::Beta { a: 3.0, b: 7.0 }, &d).unwrap();
        assert_eq!(p, AnalyticPosterior::Beta { a: 63.0, b: 147.0 });
    }

    #[test]
    fn gamma_conjugate_update() {
        let mut v = vec![40.0; 200];
        v[0] = 110.0;
        let d = Dataset::new(v).unwrap();
        assert_eq!(d.sum(), 8070.0);
        let p = conjugate_posterior(
            "poisson",
            &PriorSpec::JeffreysPoisson { lo: 0.0, hi: 100.0 },
            &d,
        )
        .unwrap();
        assert_eq!(
            p,
            AnalyticPosterior::Gamma {
                shape: 8070.5,
                rate: 200.0
            }
        );
        assert_relative_eq!(p.mean(), 40.3525);
        assert!((p.sd() - 0.4492).abs() < 5e-5);
    }

    #[test]
    fn unsupported_pair() {
        let d = bern(60, 200);
        let e = conjugate_posterior(
            "poisson",
            &PriorSpec::Normal {
                mean: 40.0,
                variance: 4.0,
            },
            &d,
        );
        assert!(matches!(e, Err(Error::NoConjugateForm { .. })));
    }

    #[test]
    fn closed_form_quantiles() {
        let u = AnalyticPosterior::Beta { a: 1.0, b: 1.0 };
        assert!((u.quantile(0.5) - 0.5).abs() < 1e-10);
        let e = AnalyticPosterior::Gamma {
            shape: 1.0,
            rate: 2.0,
        };
        assert!((e.quantile(0.5) - 2f64.ln() / 2.0).abs() < 1e-9);
        assert!((e.quantile(0.5) - 0.34657).abs() < 1e-5);
    }

    #[test]
    fn cdf_inverts_quantile() {
        for post in [
            AnalyticPosterior::Beta { a: 61.0, b: 141.0 },
            AnalyticPosterior::Beta { a: 0.5, b: 3.0 },
            AnalyticPosterior::Gamma {
                shape: 8070.5,
                rate: 200.0,
            },
            AnalyticPosterior::Gamma {
                shape: 2.5,
                rate: 0.1,
            },
        ] {
            for p in QUANTILE_LEVELS {
                let q = post.quantile(p);
                assert!((post.cdf(q) - p).abs() < 1e-8, "{post:?} p={p}");
            }
        }
    }

    #[test]
    fn published_bernoulli_interval_is_bracketed() {
        let post = AnalyticPosterior::Beta { a: 61.0, b: 141.0 };
        assert!((post.quantile(0.025) - 0.25).abs() <= 0.01);
        assert!((post.quantile(0.975) - 0.36).abs() <= 0.01);
    }

    #[test]
    fn metropolis_gaussian_mean() {
        let m = 3.0;
        let cfg = MHConfig {
            proposal_sd: 2.4,
            steps: 101_000,
            warmup: 1_000,
            seed: 11,
        };
        let out = rw_metropolis(|x| -0.5 * (x - m) * (x - m), 0.0, &cfg).unwrap();
        assert_eq!(out.draws.len(), 100_000);
        let mean = out.draws.values.iter().sum::<f64>() / 1e5;
        // iid CLT sd is 0.0032; allow for the chain's autocorrelation
        assert!((mean - m).abs() < 0.04, "mean {mean}");
    }

    #[test]
    fn metropolis_tiny_proposal_accepts_everything() {
        let cfg = MHConfig {
            proposal_sd: 1e-9,
            steps: 5_000,
            warmup: 0,
            seed: 1,
        };
        let out = rw_metropolis(|x| -0.5 * x * x, 0.5, &cfg).unwrap();
        assert!(out.acceptance_rate > 0.999);
    }

    #[test]
    fn metropolis_is_deterministic() {
        let cfg = MHConfig {
            proposal_sd: 0.7,
            steps: 2_000,
            warmup: 100,
            seed: 5,
        };
        let a = rw_metropolis(|x| -x.abs(), 0.0, &cfg).unwrap();
        let b = rw_metropolis(|x| -x.abs(), 0.0, &cfg).unwrap();
        assert_eq!(a, b);
        let chains = rw_metropolis_chains(|x| -x.abs(), 0.0, &cfg, 3).unwrap();
        assert_eq!(chains[0], a);
        assert_ne!(chains[1], a);
    }

    #[test]
    fn metropolis_rejects_bad_start() {
        let cfg = MHConfig {
            proposal_sd: 1.0,
            steps: 10,
            warmup: 0,
            seed: 0,
        };
        assert!(rw_metropolis(|_| f64::NEG_INFINITY, 0.0, &cfg).is_err());
    }
}
