//! Report schemas and file writers.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use ballpit::diagnostics::{density_bins, DensityBin};
use ballpit::{AnalyticPosterior, EnsembleOutput, PosteriorSummary, PriorSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const DENSITY_BINS: usize = 100;
pub const DENSITY_RANGE: (f64, f64) = (0.001, 0.999);

/// Contents of `summary.json` written by `run`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    #[serde(flatten)]
    pub summary: PosteriorSummary,
    pub model: String,
    pub prior: String,
    /// Sampling interval of a truncated or bounded prior, if any.
    pub truncation: Option<[f64; 2]>,
    /// Frozen Cauchy coordinate, e.g. `{"eta": 2.75}`.
    pub fixed: BTreeMap<String, f64>,
    pub seed: u64,
    pub acceptance_rate: f64,
    pub reseed_counts: Vec<usize>,
    pub total_reseeds: usize,
    pub config: BTreeMap<String, String>,
}

/// Contents of `summary.json` written by `oracle`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    #[serde(flatten)]
    pub summary: PosteriorSummary,
    pub model: String,
    pub prior: String,
    /// `analytic` or `mh`.
    pub method: String,
    pub posterior: Option<AnalyticPosterior>,
    pub fixed: BTreeMap<String, f64>,
    pub proposal_sd: Option<f64>,
    pub chains: Option<usize>,
    pub acceptance_rate: Option<f64>,
    pub config: BTreeMap<String, String>,
}

pub fn truncation(prior: &PriorSpec) -> Option<[f64; 2]> {
    match *prior {
        PriorSpec::Uniform { lo, hi } | PriorSpec::JeffreysPoisson { lo, hi } => Some([lo, hi]),
        _ => None,
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::io(format!("cannot write {}: {e}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::io(format!("cannot serialize {}: {e}", path.display())))?;
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

/// Post-warmup draws as `ball_id,step,value`, steps counted from 1 over the
/// whole run.
pub fn write_draws(path: &Path, out: &EnsembleOutput) -> CliResult<()> {
    let write = || -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "ball_id,step,value")?;
        for chain in &out.chains {
            for (i, v) in chain.post_warmup(out.warmup_steps).iter().enumerate() {
                writeln!(w, "{},{},{}", chain.ball_id, out.warmup_steps + i + 1, v)?;
            }
        }
        w.flush()
    };
    write().map_err(|e| io_err(path, e))
}

pub fn write_density(path: &Path, values: &[f64]) -> CliResult<()> {
    let bins = density_bins(values, DENSITY_BINS, DENSITY_RANGE.0, DENSITY_RANGE.1);
    write_density_bins(path, &bins)
}

fn write_density_bins(path: &Path, bins: &[DensityBin]) -> CliResult<()> {
    let write = || -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "bin_left,bin_right,count")?;
        for b in bins {
            writeln!(w, "{},{},{}", b.bin_left, b.bin_right, b.count)?;
        }
        w.flush()
    };
    write().map_err(|e| io_err(path, e))
}

/// Draws read back from `draws.csv`, grouped by ball in file order.
pub fn read_draws(path: &Path) -> CliResult<Vec<(usize, Vec<f64>)>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    let mut balls: Vec<(usize, Vec<f64>)> = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let bad = || CliError::data(format!("{}:{}: malformed row", path.display(), i + 1));
        let mut parts = line.split(',');
        let id: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let _step: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let v: f64 = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        match balls.last_mut() {
            Some((last, vs)) if *last == id => vs.push(v),
            _ => balls.push((id, vec![v])),
        }
    }
    Ok(balls)
}
