//! Dataset ingestion and synthetic data generation.

use std::fs;
use std::path::Path;

use ballpit::Dataset;
use clap::ValueEnum;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, Poisson};

use crate::error::{CliError, CliResult};

/// Reads one value per line. A first line that is not a number is taken as a
/// header; blank lines are skipped. A trailing comma (single-column CSV) is
/// tolerated.
pub fn read_values(path: &Path) -> CliResult<Vec<f64>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read data file {}: {e}", path.display())))?;
    let mut values = Vec::new();
    let mut first = true;
    for (i, raw) in text.lines().enumerate() {
        let field = raw.trim().trim_end_matches(',').trim();
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if first => {}
            Err(_) => {
                return Err(CliError::data(format!(
                    "{}:{}: `{field}` is not a number",
                    path.display(),
                    i + 1
                )))
            }
        }
        first = false;
    }
    Ok(values)
}

pub fn load_dataset(path: &Path) -> CliResult<Dataset> {
    let values = read_values(path)?;
    Dataset::new(values).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimDistribution {
    Bernoulli,
    Poisson,
}

/// `n` draws from Bernoulli(`param`) or Poisson(`param`), deterministic in `seed`.
pub fn simulate(dist: SimDistribution, param: f64, n: usize, seed: u64) -> CliResult<Vec<u64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match dist {
        SimDistribution::Bernoulli => {
            let d = Bernoulli::new(param)
                .map_err(|e| CliError::config(format!("bernoulli p={param}: {e}")))?;
            Ok((0..n).map(|_| d.sample(&mut rng) as u64).collect())
        }
        SimDistribution::Poisson => {
            let d = Poisson::new(param)
                .map_err(|e| CliError::config(format!("poisson lambda={param}: {e}")))?;
            Ok((0..n).map(|_| d.sample(&mut rng) as u64).collect())
        }
    }
}

pub fn to_dataset(values: &[u64]) -> CliResult<Dataset> {
    Dataset::new(values.iter().map(|&v| v as f64).collect()).map_err(CliError::from)
}
