use ballpit::diagnostics::{self, QUANTILE_LEVELS};
use ballpit::engine::{acceptance_probability, ball_stream};
use ballpit::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const DARWIN: [f64; 15] = [
    49.0, -67.0, 8.0, 16.0, 6.0, 23.0, 28.0, 41.0, 14.0, 29.0, 56.0, 24.0, 75.0, 60.0, -48.0,
];

fn bernoulli_data() -> Dataset {
    Dataset::new(
        (0..200)
            .map(|i| if i % 10 < 3 { 1.0 } else { 0.0 })
            .collect(),
    )
    .unwrap()
}

fn poisson_data() -> Dataset {
    Dataset::new((0..200).map(|i| (30 + i % 21) as f64).collect()).unwrap()
}

fn darwin() -> Dataset {
    Dataset::new(DARWIN.to_vec()).unwrap()
}

fn assert_fd_gradient<M: ScalarModel>(model: &M, theta: f64) {
    let h = 1e-5 * theta.abs().max(1.0);
    let fd = (model.log_lik(theta + h).unwrap() - model.log_lik(theta - h).unwrap()) / (2.0 * h);
    let g = model.grad_log_lik(theta).unwrap();
    let scale = g.abs().max(1.0);
    assert!(
        (fd - g).abs() <= 1e-6 * scale,
        "{} at {theta}: analytic {g}, finite difference {fd}",
        model.label()
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn bernoulli_gradient_matches_finite_differences(theta in 0.05f64..0.95) {
        assert_fd_gradient(&bernoulli_model(&bernoulli_data()).unwrap(), theta);
    }

    #[test]
    fn poisson_gradient_matches_finite_differences(lambda in 5.0f64..100.0) {
        assert_fd_gradient(&poisson_model(&poisson_data()).unwrap(), lambda);
    }

    #[test]
    fn cauchy_mu_gradient_matches_finite_differences(mu in -50.0f64..80.0, eta in 1.0f64..4.0) {
        assert_fd_gradient(&cauchy_mu_model(&darwin(), eta).unwrap(), mu);
    }

    #[test]
    fn cauchy_eta_gradient_matches_finite_differences(eta in -1.0f64..5.0, mu in 0.0f64..50.0) {
        assert_fd_gradient(&cauchy_eta_model(&darwin(), mu).unwrap(), eta);
    }
}

proptest! {
    #[test]
    fn acceptance_probability_is_a_probability(cur in -1e6f64..1e6, cand in -1e6f64..1e6) {
        let p = acceptance_probability(cur, cand);
        prop_assert!((0.0..=1.0).contains(&p));
        if cand > cur {
            prop_assert!(accept_candidate(cur, cand, 0.999_999_999));
        }
    }

    #[test]
    fn summary_ignores_draw_order(values in prop::collection::vec(-100.0f64..100.0, 8..200), seed in any::<u64>()) {
        let mut shuffled = values.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let half = values.len() / 2;
        let summary = |v: &[f64]| {
            let pooled = PooledSample { values: v.to_vec() };
            summarize(&pooled, &[&v[..half], &v[half..]], 0.0).unwrap()
        };
        let (a, b) = (summary(&values), summary(&shuffled));
        prop_assert!((a.mean - b.mean).abs() <= 1e-9);
        prop_assert!((a.sd - b.sd).abs() <= 1e-9);
        prop_assert_eq!(a.quantiles, b.quantiles);
    }

    #[test]
    fn summary_quantiles_are_ordered(values in prop::collection::vec(-1e3f64..1e3, 8..100)) {
        let pooled = PooledSample { values: values.clone() };
        let half = values.len() / 2;
        let s = summarize(&pooled, &[&values[..half], &values[half..]], 0.0).unwrap();
        let q = s.quantiles.to_array();
        prop_assert!(q.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(s.sd >= 0.0 && s.mcse >= 0.0);
    }
}

#[test]
fn gradients_decrease_monotonically() {
    let b = bernoulli_model(&bernoulli_data()).unwrap();
    let p = poisson_model(&poisson_data()).unwrap();
    let grads = |m: &dyn Fn(f64) -> f64, lo: f64, hi: f64| -> Vec<f64> {
        (0..100)
            .map(|i| m(lo + (hi - lo) * i as f64 / 99.0))
            .collect()
    };
    let gb = grads(&|t| b.grad_log_lik(t).unwrap(), 0.001, 0.999);
    let gp = grads(&|l| p.grad_log_lik(l).unwrap(), 0.1, 200.0);
    assert!(gb.windows(2).all(|w| w[1] < w[0]));
    assert!(gp.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn log_lik_is_never_nan_inside_support() {
    let b = bernoulli_model(&bernoulli_data()).unwrap();
    let p = poisson_model(&poisson_data()).unwrap();
    let cm = cauchy_mu_model(&darwin(), 2.75).unwrap();
    let ce = cauchy_eta_model(&darwin(), 25.0).unwrap();
    for i in 1..1000 {
        let u = i as f64 / 1000.0;
        assert!(!b.log_lik(u).unwrap().is_nan());
        assert!(!p.log_lik(u * 1e4).unwrap().is_nan());
        assert!(!cm.log_lik((u - 0.5) * 1e6).unwrap().is_nan());
        assert!(!ce.log_lik((u - 0.5) * 40.0).unwrap().is_nan());
    }
    assert!(matches!(b.log_lik(1.0), Err(Error::OutOfSupport(_))));
    assert!(matches!(p.log_lik(-1.0), Err(Error::OutOfSupport(_))));
}

const CELL: f64 = 0.01;

/// Joint mode by exhaustive search over μ ∈ [lo, lo + 60], η ∈ [1, 4] at 0.01.
fn grid_mode(data: &[f64], mu_lo: f64) -> (f64, f64, f64) {
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..=6000 {
        let mu = mu_lo + i as f64 * 0.01;
        for j in 0..=300 {
            let eta = 1.0 + j as f64 * 0.01;
            let ll = models::cauchy_log_lik(data, mu, eta);
            if ll > best.0 {
                best = (ll, mu, eta);
            }
        }
    }
    (best.1, best.2, best.0)
}

/// The continuous mode must beat every grid point and lie in one of the cells
/// touching the grid maximizer. Along the correlated μ–η ridge the grid
/// maximizer can sit more than half a cell away from the true mode.
fn assert_near_grid(data: &[f64], mode: CauchyParams, mu_lo: f64) {
    let (g_mu, g_eta, g_best) = grid_mode(data, mu_lo);
    assert!(models::cauchy_log_lik(data, mode.mu, mode.eta) >= g_best);
    assert!(
        (mode.mu - g_mu).abs() < 2.0 * CELL,
        "mu {} vs grid {g_mu}",
        mode.mu
    );
    assert!(
        (mode.eta - g_eta).abs() < 2.0 * CELL,
        "eta {} vs grid {g_eta}",
        mode.eta
    );
}

#[test]
fn laplace_mode_agrees_with_grid_search() {
    let data = darwin();
    let mode = laplace_mode(
        &data,
        CauchyParams {
            mu: data.mean(),
            eta: 3.0,
        },
    )
    .unwrap();
    assert_near_grid(&DARWIN, mode, 0.0);
    let (a, b) = models::cauchy_grad(&DARWIN, mode.mu, mode.eta);
    assert!(a.hypot(b) < 1e-8, "gradient norm {}", a.hypot(b));
}

#[test]
fn shifting_data_shifts_the_mode() {
    let shift = 17.0;
    let shifted: Vec<f64> = DARWIN.iter().map(|x| x + shift).collect();
    let base = laplace_mode(&darwin(), CauchyParams { mu: 20.0, eta: 3.0 }).unwrap();
    let moved = laplace_mode(
        &Dataset::new(shifted.clone()).unwrap(),
        CauchyParams {
            mu: 20.0 + shift,
            eta: 3.0,
        },
    )
    .unwrap();
    assert!((moved.mu - base.mu - shift).abs() < 1e-6);
    assert!((moved.eta - base.eta).abs() < 1e-6);
    assert_near_grid(&shifted, moved, shift);
}

fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn prior_draws_match_their_cdfs() {
    for (k, prior) in [
        PriorSpec::Uniform { lo: 0.0, hi: 1.0 },
        PriorSpec::Uniform {
            lo: -3.0,
            hi: 100.0,
        },
        PriorSpec::JeffreysPoisson { lo: 0.0, hi: 100.0 },
        PriorSpec::JeffreysPoisson { lo: 4.0, hi: 9.0 },
        PriorSpec::Beta { a: 1.0, b: 1.0 },
    ]
    .into_iter()
    .enumerate()
    {
        let mut rng = ball_stream(11, k);
        let xs: Vec<f64> = (0..10_000)
            .map(|_| prior.sample(&mut rng).unwrap())
            .collect();
        let d = ks_statistic(xs, |x| prior.cdf(x).unwrap());
        assert!(d < 0.02, "{prior}: KS {d}");
    }
}

#[test]
fn beta_one_one_looks_uniform() {
    let mut rng = ball_stream(5, 0);
    let beta = PriorSpec::Beta { a: 1.0, b: 1.0 };
    let xs: Vec<f64> = (0..10_000)
        .map(|_| beta.sample(&mut rng).unwrap())
        .collect();
    assert!(ks_statistic(xs, |x| x.clamp(0.0, 1.0)) < 0.02);
}

#[test]
fn mcse_shrinks_with_more_balls() {
    let normal = Normal::new(3.0, 2.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let balls: Vec<Vec<f64>> = (0..800)
        .map(|_| (0..50).map(|_| normal.sample(&mut rng)).collect())
        .collect();
    let mcse = |k: usize| {
        let chains: Vec<&[f64]> = balls[..k].iter().map(|b| b.as_slice()).collect();
        let pooled = PooledSample {
            values: chains.concat(),
        };
        summarize(&pooled, &chains, 0.0).unwrap().mcse
    };
    let ratio = mcse(800) / mcse(400);
    let expected = 0.5f64.sqrt();
    assert!((ratio - expected).abs() <= 0.2 * expected, "ratio {ratio}");
}

#[test]
fn analytic_summary_draws_match_closed_form() {
    let post = AnalyticPosterior::Beta { a: 61.0, b: 141.0 };
    let beta = rand_distr::Beta::new(61.0, 141.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let draws: Vec<f64> = (0..4000).map(|_| beta.sample(&mut rng)).collect();
    let chains: Vec<&[f64]> = draws.chunks(100).collect();
    let s = summarize(
        &PooledSample {
            values: draws.clone(),
        },
        &chains,
        0.0,
    )
    .unwrap();
    assert!((s.mean - 0.30198).abs() <= 0.0021);
    assert!((s.sd - 0.03223).abs() <= 0.0011);
    assert!((post.mean() - 0.30198).abs() < 1e-5);
    let q = diagnostics::quantiles(&draws, &QUANTILE_LEVELS);
    let exact = analytic_quantiles(&post, &QUANTILE_LEVELS);
    for (a, b) in q.iter().zip(&exact) {
        assert!((a - b).abs() < 0.01);
    }
    assert!(s.rhat.unwrap() < 1.05);
}
