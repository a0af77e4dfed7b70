use std::hint::black_box;

use ballpit::engine::ball_stream;
use ballpit::{el_step, run_ensemble, BallState, PriorSpec, RunConfig};
use ballpit_bench::{bernoulli_fixture, poisson_fixture};
use criterion::{criterion_group, criterion_main, Criterion};

fn reference_config(sigma2: f64) -> RunConfig {
    RunConfig {
        n_balls: 80,
        epsilon: 0.01,
        total_steps: 1000,
        warmup_steps: 500,
        sigma2,
        stuck_lag_steps: 10,
        seed: 1,
    }
}

fn bench_step(c: &mut Criterion) {
    let model = bernoulli_fixture();
    let cfg = reference_config(1.0);
    let state = BallState::new(0.31, 0.2, ball_stream(1, 0));
    c.bench_function("el_step/bernoulli", |b| {
        b.iter(|| el_step(black_box(&state), &model, &cfg).unwrap())
    });
}

fn bench_ensemble(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_ensemble");
    group.sample_size(10);
    let bernoulli = bernoulli_fixture();
    let cfg = reference_config(1.0);
    let prior = PriorSpec::Uniform { lo: 0.0, hi: 1.0 };
    group.bench_function("bernoulli/80x1000", |b| {
        b.iter(|| run_ensemble(&bernoulli, &prior, black_box(&cfg)).unwrap())
    });
    let poisson = poisson_fixture();
    let cfg = reference_config(100.0);
    let prior = PriorSpec::JeffreysPoisson { lo: 0.0, hi: 100.0 };
    group.bench_function("poisson/80x1000", |b| {
        b.iter(|| run_ensemble(&poisson, &prior, black_box(&cfg)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_step, bench_ensemble);
criterion_main!(benches);
