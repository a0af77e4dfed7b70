//! Scalar likelihood models driving the ball dynamics.
//!
//! Each model exposes the full-data log-likelihood of one active coordinate,
//! its derivative (the force term of the equation of motion) and the interval
//! on which the coordinate lives. Evaluating outside that interval is an error,
//! never a value.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// One end of a support interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Unbounded,
    Open(f64),
    Closed(f64),
}

/// Interval on which a model coordinate is defined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    pub lower: Bound,
    pub upper: Bound,
}

impl Support {
    pub const REAL_LINE: Support = Support {
        lower: Bound::Unbounded,
        upper: Bound::Unbounded,
    };

    pub fn open(lo: f64, hi: f64) -> Self {
        Support {
            lower: Bound::Open(lo),
            upper: Bound::Open(hi),
        }
    }

    pub fn positive() -> Self {
        Support {
            lower: Bound::Open(0.0),
            upper: Bound::Unbounded,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        if !x.is_finite() {
            return false;
        }
        let above = match self.lower {
            Bound::Unbounded => true,
            Bound::Open(lo) => x > lo,
            Bound::Closed(lo) => x >= lo,
        };
        let below = match self.upper {
            Bound::Unbounded => true,
            Bound::Open(hi) => x < hi,
            Bound::Closed(hi) => x <= hi,
        };
        above && below
    }

    fn check(&self, x: f64) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::OutOfSupport(x))
        }
    }
}

/// A log-likelihood over one scalar coordinate, with its gradient.
///
/// Implementations must be immutable after construction; balls running on
/// different threads share one instance.
pub trait ScalarModel: Sync {
    fn label(&self) -> &str;

    fn support(&self) -> Support;

    /// Full-data log-likelihood. `Err(OutOfSupport)` outside [`support`](Self::support).
    fn log_lik(&self, theta: f64) -> Result<f64>;

    fn grad_log_lik(&self, theta: f64) -> Result<f64>;
}

impl<M: ScalarModel + ?Sized> ScalarModel for &M {
    fn label(&self) -> &str {
        (**self).label()
    }
    fn support(&self) -> Support {
        (**self).support()
    }
    fn log_lik(&self, theta: f64) -> Result<f64> {
        (**self).log_lik(theta)
    }
    fn grad_log_lik(&self, theta: f64) -> Result<f64> {
        (**self).grad_log_lik(theta)
    }
}

impl<M: ScalarModel + ?Sized> ScalarModel for Box<M> {
    fn label(&self) -> &str {
        (**self).label()
    }
    fn support(&self) -> Support {
        (**self).support()
    }
    fn log_lik(&self, theta: f64) -> Result<f64> {
        (**self).log_lik(theta)
    }
    fn grad_log_lik(&self, theta: f64) -> Result<f64> {
        (**self).grad_log_lik(theta)
    }
}

/// Observations x₁…x_N with the sum cached.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    sum: f64,
}

impl Dataset {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidData("dataset is empty".into()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!("non-finite observation {bad}")));
        }
        let sum = values.iter().sum();
        Ok(Dataset { values, sum })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn sum(&self) -> f64 {
        self.sum
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.n() as f64
    }
}

#[derive(Debug, Clone)]
pub struct BernoulliModel {
    successes: f64,
    n: f64,
}

/// Bernoulli likelihood for the success probability θ ∈ (0, 1).
pub fn bernoulli_model(data: &Dataset) -> Result<BernoulliModel> {
    if let Some(bad) = data.values().iter().find(|&&x| x != 0.0 && x != 1.0) {
        return Err(Error::InvalidData(format!(
            "Bernoulli observations must be 0 or 1, got {bad}"
        )));
    }
    Ok(BernoulliModel {
        successes: data.sum(),
        n: data.n() as f64,
    })
}

impl ScalarModel for BernoulliModel {
    fn label(&self) -> &str {
        "bernoulli"
    }

    fn support(&self) -> Support {
        Support::open(0.0, 1.0)
    }

    fn log_lik(&self, theta: f64) -> Result<f64> {
        self.support().check(theta)?;
        let failures = self.n - self.successes;
        Ok(self.successes * theta.ln() + failures * (-theta).ln_1p())
    }

    fn grad_log_lik(&self, theta: f64) -> Result<f64> {
        self.support().check(theta)?;
        Ok((self.successes - self.n * theta) / (theta * (1.0 - theta)))
    }
}

#[derive(Debug, Clone)]
pub struct PoissonModel {
    total: f64,
    n: f64,
    log_factorials: f64,
}

/// Poisson likelihood for the rate λ > 0. `Σ log(xᵢ!)` is folded in once so
/// that reported log weights are true log path weights.
pub fn poisson_model(data: &Dataset) -> Result<PoissonModel> {
    if let Some(bad) = data.values().iter().find(|&&x| x < 0.0 || x.fract() != 0.0) {
        return Err(Error::InvalidData(format!(
            "Poisson observations must be nonnegative integers, got {bad}"
        )));
    }
    let log_factorials = data.values().iter().map(|&x| ln_gamma(x + 1.0)).sum();
    Ok(PoissonModel {
        total: data.sum(),
        n: data.n() as f64,
        log_factorials,
    })
}

impl ScalarModel for PoissonModel {
    fn label(&self) -> &str {
        "poisson"
    }

    fn support(&self) -> Support {
        Support::positive()
    }

    fn log_lik(&self, lambda: f64) -> Result<f64> {
        self.support().check(lambda)?;
        Ok(-self.n * lambda + self.total * lambda.ln() - self.log_factorials)
    }

    fn grad_log_lik(&self, lambda: f64) -> Result<f64> {
        self.support().check(lambda)?;
        Ok(self.total / lambda - self.n)
    }
}

/// Location and log-scale of a Cauchy likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CauchyParams {
    pub mu: f64,
    pub eta: f64,
}

impl CauchyParams {
    pub fn scale(&self) -> f64 {
        self.eta.exp()
    }
}

/// Cauchy log-likelihood as a function of μ with η held fixed.
#[derive(Debug, Clone)]
pub struct CauchyMuModel {
    data: Vec<f64>,
    eta: f64,
}

pub fn cauchy_mu_model(data: &Dataset, eta_fixed: f64) -> Result<CauchyMuModel> {
    if !eta_fixed.is_finite() {
        return Err(Error::InvalidData(format!(
            "fixed eta {eta_fixed} is not finite"
        )));
    }
    Ok(CauchyMuModel {
        data: data.values().to_vec(),
        eta: eta_fixed,
    })
}

impl ScalarModel for CauchyMuModel {
    fn label(&self) -> &str {
        "cauchy-mu"
    }

    fn support(&self) -> Support {
        Support::REAL_LINE
    }

    fn log_lik(&self, mu: f64) -> Result<f64> {
        self.support().check(mu)?;
        Ok(cauchy_log_lik(&self.data, mu, self.eta))
    }

    fn grad_log_lik(&self, mu: f64) -> Result<f64> {
        self.support().check(mu)?;
        Ok(cauchy_grad(&self.data, mu, self.eta).0)
    }
}

/// Cauchy log-likelihood as a function of η = log σ with μ held fixed.
///
/// The σ⁻¹ prior is flat in η, so this gradient is also the full log-posterior
/// gradient along η.
#[derive(Debug, Clone)]
pub struct CauchyEtaModel {
    data: Vec<f64>,
    mu: f64,
}

pub fn cauchy_eta_model(data: &Dataset, mu_fixed: f64) -> Result<CauchyEtaModel> {
    if !mu_fixed.is_finite() {
        return Err(Error::InvalidData(format!(
            "fixed mu {mu_fixed} is not finite"
        )));
    }
    Ok(CauchyEtaModel {
        data: data.values().to_vec(),
        mu: mu_fixed,
    })
}

impl ScalarModel for CauchyEtaModel {
    fn label(&self) -> &str {
        "cauchy-eta"
    }

    fn support(&self) -> Support {
        Support::REAL_LINE
    }

    fn log_lik(&self, eta: f64) -> Result<f64> {
        self.support().check(eta)?;
        Ok(cauchy_log_lik(&self.data, self.mu, eta))
    }

    fn grad_log_lik(&self, eta: f64) -> Result<f64> {
        self.support().check(eta)?;
        Ok(cauchy_grad(&self.data, self.mu, eta).1)
    }
}

/// Joint Cauchy log posterior in (μ, η) under the prior flat in (μ, η).
pub fn cauchy_log_lik(data: &[f64], mu: f64, eta: f64) -> f64 {
    let inv_scale = (-eta).exp();
    data.iter()
        .map(|&x| {
            let z = (x - mu) * inv_scale;
            -PI.ln() - eta - (z * z).ln_1p()
        })
        .sum()
}

/// Partial derivatives of [`cauchy_log_lik`] with respect to (μ, η).
pub fn cauchy_grad(data: &[f64], mu: f64, eta: f64) -> (f64, f64) {
    let s2 = (2.0 * eta).exp();
    data.iter().fold((0.0, 0.0), |(gm, ge), &x| {
        let d = x - mu;
        let d2 = d * d;
        (gm + 2.0 * d / (s2 + d2), ge + (d2 - s2) / (d2 + s2))
    })
}

const LAPLACE_TOL: f64 = 1e-8;
const LAPLACE_ACCEPTABLE: f64 = 1e-4;
const LAPLACE_MAX_ITER: usize = 10_000;

/// Joint posterior mode of (μ, η) by gradient ascent with Armijo backtracking.
///
/// Trial steps use the Barzilai-Borwein length from the previous iterate and
/// are halved until the sufficient-increase condition holds.
pub fn laplace_mode(data: &Dataset, init: CauchyParams) -> Result<CauchyParams> {
    if !init.mu.is_finite() || !init.eta.is_finite() {
        return Err(Error::InvalidData(
            "Laplace initial point is not finite".into(),
        ));
    }
    let xs = data.values();
    let objective = |p: [f64; 2]| cauchy_log_lik(xs, p[0], p[1]);
    let gradient = |p: [f64; 2]| {
        let (a, b) = cauchy_grad(xs, p[0], p[1]);
        [a, b]
    };

    let mut x = [init.mu, init.eta];
    let mut fx = objective(x);
    let mut g = gradient(x);
    let mut step = 1.0;
    let mut norm = g[0].hypot(g[1]);

    for _ in 0..LAPLACE_MAX_ITER {
        if norm < LAPLACE_TOL {
            return Ok(CauchyParams {
                mu: x[0],
                eta: x[1],
            });
        }
        let mut t = step;
        let (x_new, f_new) = loop {
            let cand = [x[0] + t * g[0], x[1] + t * g[1]];
            let f_cand = objective(cand);
            if f_cand >= fx + 1e-4 * t * norm * norm {
                break (cand, f_cand);
            }
            // near the mode the increase drops below the resolution of f
            let flat = (f_cand - fx).abs() <= 64.0 * f64::EPSILON * fx.abs().max(1.0);
            if flat {
                let gc = gradient(cand);
                if gc[0].hypot(gc[1]) < norm {
                    break (cand, f_cand);
                }
            }
            t *= 0.5;
            if t < 1e-300 {
                // no ascent possible at machine precision
                return finish(x, norm);
            }
        };
        let g_new = gradient(x_new);
        let s = [x_new[0] - x[0], x_new[1] - x[1]];
        let y = [g[0] - g_new[0], g[1] - g_new[1]];
        let sy = s[0] * y[0] + s[1] * y[1];
        step = if sy > 0.0 {
            (s[0] * s[0] + s[1] * s[1]) / sy
        } else {
            t * 2.0
        };
        x = x_new;
        fx = f_new;
        g = g_new;
        norm = g[0].hypot(g[1]);
    }
    finish(x, norm)
}

fn finish(x: [f64; 2], norm: f64) -> Result<CauchyParams> {
    if norm < LAPLACE_ACCEPTABLE {
        Ok(CauchyParams {
            mu: x[0],
            eta: x[1],
        })
    } else {
        Err(Error::NoConvergence {
            iterations: LAPLACE_MAX_ITER,
            grad_norm: norm,
        })
    }
}
