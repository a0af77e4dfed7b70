//! Shared fixtures for the sampler benchmarks.

use ballpit::{bernoulli_model, poisson_model, BernoulliModel, Dataset, PoissonModel};

/// 200 Bernoulli observations with 60 successes.
pub fn bernoulli_fixture() -> BernoulliModel {
    let values = (0..200)
        .map(|i| if i % 10 < 3 { 1.0 } else { 0.0 })
        .collect();
    bernoulli_model(&Dataset::new(values).unwrap()).unwrap()
}

/// 200 Poisson counts with mean 40.
pub fn poisson_fixture() -> PoissonModel {
    let values = (0..200).map(|i| (30 + i % 21) as f64).collect();
    poisson_model(&Dataset::new(values).unwrap()).unwrap()
}
