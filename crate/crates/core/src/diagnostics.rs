//! Posterior summaries and trajectory diagnostics.

use serde::{Deserialize, Serialize};

use crate::engine::{PooledSample, RunConfig};
use crate::error::{Error, Result};
use crate::models::ScalarModel;

pub const QUANTILE_LEVELS: [f64; 5] = [0.025, 0.25, 0.5, 0.75, 0.975];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    #[serde(rename = "0.025")]
    pub q025: f64,
    #[serde(rename = "0.25")]
    pub q25: f64,
    #[serde(rename = "0.5")]
    pub q50: f64,
    #[serde(rename = "0.75")]
    pub q75: f64,
    #[serde(rename = "0.975")]
    pub q975: f64,
}

impl Quantiles {
    pub fn from_slice(q: &[f64]) -> Self {
        assert_eq!(q.len(), QUANTILE_LEVELS.len(), "expected five quantiles");
        Quantiles {
            q025: q[0],
            q25: q[1],
            q50: q[2],
            q75: q[3],
            q975: q[4],
        }
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.q025, self.q25, self.q50, self.q75, self.q975]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub mean: f64,
    /// Monte Carlo standard error of the mean, batch means over balls.
    pub mcse: f64,
    pub sd: f64,
    pub quantiles: Quantiles,
    /// `None` for closed-form summaries.
    pub ess: Option<f64>,
    pub rhat: Option<f64>,
    pub n: usize,
    pub runtime_seconds: f64,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation with the `n − 1` denominator; zero for `n < 2`.
pub fn sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Linear interpolation between order statistics at plotting positions
/// `(k − 1)/(n − 1)`. `sorted` must be ascending and nonempty.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn quantiles(xs: &[f64], probs: &[f64]) -> Vec<f64> {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    probs.iter().map(|&p| quantile_sorted(&sorted, p)).collect()
}

/// Split R-hat: each chain is cut in half (the middle draw of an odd-length
/// chain is dropped) and the classic potential scale reduction is computed
/// over the halves. Chains are truncated to the shortest length.
pub fn split_rhat(chains: &[&[f64]]) -> Result<f64> {
    let len = chains.iter().map(|c| c.len()).min().unwrap_or(0);
    if len < 4 {
        return Err(Error::InsufficientData(
            "split R-hat needs chains of at least 4 draws".into(),
        ));
    }
    let half = len / 2;
    let halves: Vec<&[f64]> = chains
        .iter()
        .flat_map(|c| [&c[..half], &c[len - half..len]])
        .collect();
    Ok(rhat(&halves, half))
}

fn rhat(chains: &[&[f64]], n: usize) -> f64 {
    let means: Vec<f64> = chains.iter().map(|c| mean(&c[..n])).collect();
    let within = mean(
        &chains
            .iter()
            .map(|c| sd(&c[..n]).powi(2))
            .collect::<Vec<_>>(),
    );
    let nf = n as f64;
    let between = nf * sd(&means).powi(2);
    if within == 0.0 {
        return if between == 0.0 { 1.0 } else { f64::INFINITY };
    }
    let var_plus = (nf - 1.0) / nf * within + between / nf;
    (var_plus / within).sqrt()
}

/// Multi-chain effective sample size with Geyer's initial positive sequence.
///
/// Autocorrelations are combined across chains through the within-chain
/// autocovariance and the pooled variance estimate `var⁺`. A constant sample
/// has ESS equal to its size.
pub fn ess(chains: &[&[f64]]) -> Result<f64> {
    let n = chains.iter().map(|c| c.len()).min().unwrap_or(0);
    if chains.is_empty() || n < 2 {
        return Err(Error::InsufficientData(
            "ESS needs at least 2 draws per chain".into(),
        ));
    }
    let m = chains.len();
    let nf = n as f64;
    let chains: Vec<&[f64]> = chains.iter().map(|c| &c[..n]).collect();
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();

    let mean_acov = |lag: usize| -> f64 {
        chains
            .iter()
            .zip(&means)
            .map(|(c, &mu)| {
                (0..n - lag)
                    .map(|i| (c[i] - mu) * (c[i + lag] - mu))
                    .sum::<f64>()
                    / nf
            })
            .sum::<f64>()
            / m as f64
    };

    let acov0 = mean_acov(0);
    let within = acov0 * nf / (nf - 1.0);
    let between_over_n = if m > 1 { sd(&means).powi(2) } else { 0.0 };
    let var_plus = within * (nf - 1.0) / nf + between_over_n;
    let total = (m * n) as f64;
    if var_plus <= 0.0 {
        return Ok(total);
    }
    let rho = |lag: usize| 1.0 - (within - mean_acov(lag)) / var_plus;

    let mut sum_pairs = 0.0;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = rho(lag) + rho(lag + 1);
        if pair <= 0.0 {
            break;
        }
        sum_pairs += pair;
        lag += 2;
    }
    let tau = (-1.0 + 2.0 * sum_pairs).max(1.0 / total.log10().max(1.0));
    Ok(total / tau)
}

/// Summary of pooled draws, with per-ball post-warmup chains used for the
/// batch-means MCSE, split R-hat and ESS.
pub fn summarize(
    pooled: &PooledSample,
    chains: &[&[f64]],
    runtime_seconds: f64,
) -> Result<PosteriorSummary> {
    if pooled.is_empty() {
        return Err(Error::InsufficientData("pooled sample is empty".into()));
    }
    if chains.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "MCSE and R-hat need at least 2 balls, got {}",
            chains.len()
        )));
    }
    let values = &pooled.values;
    let ball_means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    Ok(PosteriorSummary {
        mean: mean(values),
        mcse: sd(&ball_means) / (chains.len() as f64).sqrt(),
        sd: sd(values),
        quantiles: Quantiles::from_slice(&quantiles(values, &QUANTILE_LEVELS)),
        ess: Some(ess(chains)?),
        rhat: Some(split_rhat(chains)?),
        n: values.len(),
        runtime_seconds,
    })
}

/// Discrete Euclidean action `Σᵢ [θ̇ᵢ²/(2σ²) − log L(θᵢ)]` with
/// `θ̇ᵢ = (θᵢ − θᵢ₋₁)/ε`, over steps `i ≥ 1`. Out-of-support points
/// contribute `+inf`.
pub fn trajectory_action<M: ScalarModel + ?Sized>(
    trajectory: &[f64],
    model: &M,
    config: &RunConfig,
) -> f64 {
    trajectory
        .windows(2)
        .map(|w| {
            let rate = (w[1] - w[0]) / config.epsilon;
            match model.log_lik(w[1]) {
                Ok(ll) => rate * rate / (2.0 * config.sigma2) - ll,
                Err(_) => f64::INFINITY,
            }
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityBin {
    pub bin_left: f64,
    pub bin_right: f64,
    pub count: usize,
}

/// Histogram over the `[lo_p, hi_p]` quantile range of `xs`. Draws outside
/// the range are not counted; the last bin is closed on the right.
pub fn density_bins(xs: &[f64], bins: usize, lo_p: f64, hi_p: f64) -> Vec<DensityBin> {
    if xs.is_empty() || bins == 0 {
        return Vec::new();
    }
    let q = quantiles(xs, &[lo_p, hi_p]);
    let (lo, hi) = (q[0], q[1]);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in xs {
        if x < lo || x > hi {
            continue;
        }
        let k = if width > 0.0 {
            (((x - lo) / width) as usize).min(bins - 1)
        } else {
            0
        };
        counts[k] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| DensityBin {
            bin_left: lo + k as f64 * width,
            bin_right: if k + 1 == bins {
                hi
            } else {
                lo + (k + 1) as f64 * width
            },
            count,
        })
        .collect()
}
