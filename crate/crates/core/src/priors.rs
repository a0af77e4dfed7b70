//! Starting and reseed distributions for the balls.
//!
//! Priors are only ever sampled (to place balls) or evaluated for reporting;
//! the acceptance rule uses the likelihood alone. Improper families must carry
//! a finite truncation interval to be sampleable.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriorSpec {
    Beta {
        a: f64,
        b: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    Normal {
        mean: f64,
        variance: f64,
    },
    /// Density ∝ λ^(−1/2), truncated to `[lo, hi]`.
    JeffreysPoisson {
        lo: f64,
        hi: f64,
    },
    Point(f64),
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            PriorSpec::Beta { a, b } => a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite(),
            PriorSpec::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
            PriorSpec::Normal { mean, variance } => {
                mean.is_finite() && variance.is_finite() && variance > 0.0
            }
            PriorSpec::JeffreysPoisson { lo, hi } => {
                lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo < hi
            }
            PriorSpec::Point(v) => v.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidPrior(format!(
                "parameter constraints violated: {self}"
            )))
        }
    }

    /// Whether the untruncated family integrates to one.
    pub fn proper(&self) -> bool {
        !matches!(self, PriorSpec::JeffreysPoisson { .. })
    }

    /// Draws one value from the prior.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        self.validate()?;
        let x = match *self {
            PriorSpec::Beta { a, b } => {
                let ga = Gamma::new(a, 1.0).map_err(|e| Error::InvalidPrior(e.to_string()))?;
                let gb = Gamma::new(b, 1.0).map_err(|e| Error::InvalidPrior(e.to_string()))?;
                let x = ga.sample(rng);
                let y = gb.sample(rng);
                x / (x + y)
            }
            PriorSpec::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            PriorSpec::Normal { mean, variance } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + variance.sqrt() * z
            }
            PriorSpec::JeffreysPoisson { lo, hi } => {
                let (rl, rh) = (lo.sqrt(), hi.sqrt());
                let r = rl + rng.random::<f64>() * (rh - rl);
                r * r
            }
            PriorSpec::Point(v) => v,
        };
        Ok(x)
    }

    /// Unnormalized log density; `-inf` outside the (truncated) support.
    pub fn log_density(&self, theta: f64) -> f64 {
        match *self {
            PriorSpec::Beta { a, b } => {
                if theta <= 0.0 || theta >= 1.0 {
                    // the density stays positive at an endpoint only when its exponent is zero
                    let at_zero = theta == 0.0 && a == 1.0;
                    let at_one = theta == 1.0 && b == 1.0;
                    if at_zero || at_one {
                        return 0.0;
                    }
                    return f64::NEG_INFINITY;
                }
                (a - 1.0) * theta.ln() + (b - 1.0) * (-theta).ln_1p()
            }
            PriorSpec::Uniform { lo, hi } => {
                if (lo..=hi).contains(&theta) {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            PriorSpec::Normal { mean, variance } => {
                let d = theta - mean;
                -0.5 * d * d / variance
            }
            PriorSpec::JeffreysPoisson { lo, hi } => {
                if theta > 0.0 && (lo..=hi).contains(&theta) {
                    -0.5 * theta.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            PriorSpec::Point(v) => {
                if theta == v {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// Closed-form CDF where one exists (uniform, truncated Jeffreys, point).
    pub fn cdf(&self, x: f64) -> Option<f64> {
        match *self {
            PriorSpec::Uniform { lo, hi } => Some(((x - lo) / (hi - lo)).clamp(0.0, 1.0)),
            PriorSpec::JeffreysPoisson { lo, hi } => {
                if x <= lo {
                    Some(0.0)
                } else if x >= hi {
                    Some(1.0)
                } else {
                    Some((x.sqrt() - lo.sqrt()) / (hi.sqrt() - lo.sqrt()))
                }
            }
            PriorSpec::Point(v) => Some(if x < v { 0.0 } else { 1.0 }),
            PriorSpec::Beta { a, b } => Some(if x <= 0.0 {
                0.0
            } else if x >= 1.0 {
                1.0
            } else {
                statrs::function::beta::beta_reg(a, b, x)
            }),
            PriorSpec::Normal { .. } => None,
        }
    }
}

/// Prints the CLI grammar, so `to_string().parse()` round-trips.
impl fmt::Display for PriorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PriorSpec::Beta { a, b } => write!(f, "beta:{a},{b}"),
            PriorSpec::Uniform { lo, hi } => write!(f, "uniform:{lo},{hi}"),
            PriorSpec::Normal { mean, variance } => write!(f, "normal:{mean},{variance}"),
            PriorSpec::JeffreysPoisson { lo, hi } => write!(f, "jeffreys-poisson:{lo},{hi}"),
            PriorSpec::Point(v) => write!(f, "point:{v}"),
        }
    }
}

/// Parses `beta:a,b` | `uniform:lo,hi` | `normal:mean,var` |
/// `jeffreys-poisson:lo,hi` | `point:v`.
impl FromStr for PriorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidPrior(format!("`{s}`: {msg}"));
        let (family, args) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| bad("expected family:params"))?;
        let params = args
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| bad(&e.to_string()))?;
        let want = |n: usize| {
            if params.len() == n {
                Ok(())
            } else {
                Err(bad(&format!(
                    "expected {n} parameter(s), got {}",
                    params.len()
                )))
            }
        };
        let prior = match family.trim().to_ascii_lowercase().as_str() {
            "beta" => {
                want(2)?;
                PriorSpec::Beta {
                    a: params[0],
                    b: params[1],
                }
            }
            "uniform" => {
                want(2)?;
                PriorSpec::Uniform {
                    lo: params[0],
                    hi: params[1],
                }
            }
            "normal" => {
                want(2)?;
                PriorSpec::Normal {
                    mean: params[0],
                    variance: params[1],
                }
            }
            "jeffreys-poisson" => {
                want(2)?;
                PriorSpec::JeffreysPoisson {
                    lo: params[0],
                    hi: params[1],
                }
            }
            "point" => {
                want(1)?;
                PriorSpec::Point(params[0])
            }
            other => return Err(bad(&format!("unknown family `{other}`"))),
        };
        prior.validate()?;
        Ok(prior)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn draws(prior: PriorSpec, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| prior.sample(&mut rng).unwrap()).collect()
    }

    #[test]
    fn point_prior_is_degenerate() {
        assert!(draws(PriorSpec::Point(0.3), 100, 1)
            .iter()
            .all(|&x| x == 0.3));
    }

    #[test]
    fn uniform_mean() {
        let xs = draws(PriorSpec::Uniform { lo: 0.0, hi: 1.0 }, 100_000, 2);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((0.496..=0.504).contains(&mean), "mean {mean}");
    }

    #[test]
    fn jeffreys_cdf_at_25() {
        let xs = draws(
            PriorSpec::JeffreysPoisson { lo: 0.0, hi: 100.0 },
            100_000,
            3,
        );
        let below = xs.iter().filter(|&&x| x <= 25.0).count() as f64 / xs.len() as f64;
        assert!((below - 0.5).abs() <= 0.006, "ecdf {below}");
        assert!(xs.iter().all(|&x| (0.0..=100.0).contains(&x)));
    }

    #[test]
    fn beta_draws_lie_in_unit_interval() {
        let xs = draws(PriorSpec::Beta { a: 3.0, b: 7.0 }, 10_000, 4);
        assert!(xs.iter().all(|&x| x > 0.0 && x < 1.0));
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((mean - 0.3).abs() < 0.01);
    }

    #[test]
    fn log_density_examples() {
        assert_eq!(
            PriorSpec::Uniform { lo: 0.0, hi: 1.0 }.log_density(0.5),
            0.0
        );
        assert_eq!(
            PriorSpec::Uniform { lo: 0.0, hi: 1.0 }.log_density(1.5),
            f64::NEG_INFINITY
        );
        let j = PriorSpec::JeffreysPoisson { lo: 0.0, hi: 100.0 };
        let diff = j.log_density(4.0) - j.log_density(16.0);
        assert!((diff - 2f64.ln()).abs() < 1e-14);
        assert_eq!(
            PriorSpec::Beta { a: 3.0, b: 7.0 }.log_density(0.0),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn grammar_round_trip() {
        for s in [
            "beta:3,7",
            "uniform:0,100",
            "normal:40.1,4",
            "jeffreys-poisson:0,100",
            "point:0.3",
        ] {
            let p: PriorSpec = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
            assert_eq!(p.to_string().parse::<PriorSpec>().unwrap(), p);
        }
    }

    #[test]
    fn grammar_rejects_invalid() {
        for s in [
            "beta:0,1",
            "beta:1",
            "uniform:2,1",
            "normal:0,-1",
            "jeffreys-poisson:-1,5",
            "cauchy:0,1",
            "point",
            "uniform:a,b",
        ] {
            assert!(
                matches!(s.parse::<PriorSpec>(), Err(Error::InvalidPrior(_))),
                "{s}"
            );
        }
    }

    #[test]
    fn improper_flag() {
        assert!(!PriorSpec::JeffreysPoisson { lo: 0.0, hi: 1.0 }.proper());
        assert!(PriorSpec::Beta { a: 1.0, b: 1.0 }.proper());
    }

    #[test]
    fn sample_validates() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(PriorSpec::Uniform { lo: 1.0, hi: 1.0 }
            .sample(&mut rng)
            .is_err());
    }
}
