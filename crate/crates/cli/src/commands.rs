//! The `run`, `oracle` and `simulate` subcommands.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ballpit::diagnostics::summarize;
use ballpit::oracle::rw_metropolis_chains;
use ballpit::{
    bernoulli_model, cauchy_eta_model, cauchy_mu_model, conjugate_posterior, laplace_mode,
    poisson_model, run_ensemble, CauchyParams, Dataset, MHConfig, PooledSample, PriorSpec,
    ScalarModel,
};
use clap::Args;

use crate::config::{ExperimentArgs, ExperimentConfig, Fixed, ModelKind};
use crate::data::{load_dataset, simulate, SimDistribution};
use crate::error::{CliError, CliResult};
use crate::output::{truncation, write_density, write_draws, write_json, OracleReport, RunReport};

pub const MH_CHAINS: usize = 4;
pub const MH_WARMUP: usize = 1_000;
/// Post-warmup draws per chain; four chains give 10⁵ draws.
pub const MH_DRAWS_PER_CHAIN: usize = 25_000;

/// Default random-walk proposal sd per model, giving acceptance in [0.2, 0.5]
/// on the reference datasets.
pub fn default_proposal_sd(model: ModelKind) -> f64 {
    match model {
        ModelKind::Bernoulli => 0.08,
        ModelKind::Poisson => 1.0,
        ModelKind::CauchyMu => 14.0,
        ModelKind::CauchyEta => 0.8,
    }
}

/// A model ready to sample plus the coordinate frozen for Cauchy runs.
pub struct Setup {
    pub model: Box<dyn ScalarModel>,
    pub fixed: BTreeMap<String, f64>,
    /// Joint Cauchy mode when it was computed.
    pub mode: Option<CauchyParams>,
}

/// Starting point for the joint Cauchy mode search: sample median and the
/// log of half the interquartile range.
pub fn cauchy_start(data: &Dataset) -> CauchyParams {
    let q = ballpit::diagnostics::quantiles(data.values(), &[0.25, 0.5, 0.75]);
    let half_iqr = ((q[2] - q[0]) / 2.0).max(1e-3);
    CauchyParams {
        mu: q[1],
        eta: half_iqr.ln(),
    }
}

pub fn build_model(
    kind: ModelKind,
    data: &Dataset,
    fixed: Option<Fixed>,
    laplace_init: bool,
) -> CliResult<Setup> {
    let mode = if kind.is_cauchy() && (laplace_init || fixed.is_none()) {
        Some(laplace_mode(data, cauchy_start(data))?)
    } else {
        None
    };
    let mut frozen = BTreeMap::new();
    let model: Box<dyn ScalarModel> = match kind {
        ModelKind::Bernoulli => Box::new(bernoulli_model(data)?),
        ModelKind::Poisson => Box::new(poisson_model(data)?),
        ModelKind::CauchyMu => {
            let eta = match fixed {
                Some(Fixed::Eta(v)) => v,
                _ => mode
                    .map(|m| m.eta)
                    .ok_or_else(|| CliError::config("eta is not fixed"))?,
            };
            frozen.insert("eta".to_string(), eta);
            Box::new(cauchy_mu_model(data, eta)?)
        }
        ModelKind::CauchyEta => {
            let mu = match fixed {
                Some(Fixed::Mu(v)) => v,
                _ => mode
                    .map(|m| m.mu)
                    .ok_or_else(|| CliError::config("mu is not fixed"))?,
            };
            frozen.insert("mu".to_string(), mu);
            Box::new(cauchy_eta_model(data, mu)?)
        }
    };
    Ok(Setup {
        model,
        fixed: frozen,
        mode,
    })
}

/// Runs `f` on a dedicated pool when a thread count is given.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::config(format!("cannot start {n} threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn create_out_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::io(format!("cannot create {}: {e}", dir.display())))
}

pub fn cmd_run(args: &ExperimentArgs) -> CliResult<PathBuf> {
    let cfg = ExperimentConfig::resolve(args, true)?;
    with_threads(cfg.threads, || run_experiment(&cfg))?
}

pub fn run_experiment(cfg: &ExperimentConfig) -> CliResult<PathBuf> {
    let data = load_dataset(&cfg.data)?;
    let setup = build_model(cfg.model, &data, cfg.fixed, cfg.laplace_init)?;
    let out = run_ensemble(&*setup.model, &cfg.prior, &cfg.run)?;
    let summary = summarize(&out.pooled, &out.post_warmup_chains(), out.runtime_seconds)?;
    let reseed_counts = out.reseed_counts();
    let report = RunReport {
        summary,
        model: cfg.model.to_string(),
        prior: cfg.prior.to_string(),
        truncation: truncation(&cfg.prior),
        fixed: setup.fixed,
        seed: cfg.run.seed,
        acceptance_rate: out.acceptance_rate(),
        total_reseeds: reseed_counts.iter().sum(),
        reseed_counts,
        config: cfg.echo(),
    };
    create_out_dir(&cfg.out)?;
    write_draws(&cfg.out.join("draws.csv"), &out)?;
    write_json(&cfg.out.join("summary.json"), &report)?;
    write_density(&cfg.out.join("density.csv"), &out.pooled.values)?;
    Ok(cfg.out.clone())
}

#[derive(Debug, Clone, Default, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Use random-walk Metropolis instead of the closed form.
    #[arg(long)]
    pub mh: bool,
    /// Random-walk proposal sd (default depends on the model).
    #[arg(long)]
    pub proposal_sd: Option<f64>,
}

/// Log posterior targeted by the Metropolis oracle. Cauchy coordinates use
/// the improper prior flat in (μ, η); the truncated prior only places balls.
pub fn oracle_log_post<'a>(
    kind: ModelKind,
    model: &'a dyn ScalarModel,
    prior: &'a PriorSpec,
) -> impl Fn(f64) -> f64 + Sync + 'a {
    move |x| {
        let ll = match model.log_lik(x) {
            Ok(ll) if !ll.is_nan() => ll,
            _ => return f64::NEG_INFINITY,
        };
        if kind.is_cauchy() {
            ll
        } else {
            ll + prior.log_density(x)
        }
    }
}

/// Starting point of the Metropolis chains: the MLE or the Cauchy mode.
pub fn oracle_init(kind: ModelKind, data: &Dataset, setup: &Setup) -> f64 {
    match kind {
        ModelKind::Bernoulli => data.mean().clamp(0.01, 0.99),
        ModelKind::Poisson => data.mean().max(0.5),
        ModelKind::CauchyMu => setup.mode.map_or(data.mean(), |m| m.mu),
        ModelKind::CauchyEta => setup.mode.map_or(0.0, |m| m.eta),
    }
}

pub struct MhRun {
    pub summary: ballpit::PosteriorSummary,
    pub acceptance_rate: f64,
    pub proposal_sd: f64,
}

pub fn mh_oracle(
    kind: ModelKind,
    data: &Dataset,
    prior: &PriorSpec,
    setup: &Setup,
    proposal_sd: f64,
    seed: u64,
) -> CliResult<MhRun> {
    let start = Instant::now();
    let cfg = MHConfig {
        proposal_sd,
        steps: MH_WARMUP + MH_DRAWS_PER_CHAIN,
        warmup: MH_WARMUP,
        seed,
    };
    let log_post = oracle_log_post(kind, &*setup.model, prior);
    let init = oracle_init(kind, data, setup);
    let chains = rw_metropolis_chains(log_post, init, &cfg, MH_CHAINS)?;
    let slices: Vec<&[f64]> = chains.iter().map(|c| c.draws.values.as_slice()).collect();
    let pooled = PooledSample {
        values: slices.concat(),
    };
    let acceptance_rate =
        chains.iter().map(|c| c.acceptance_rate).sum::<f64>() / chains.len() as f64;
    let summary = summarize(&pooled, &slices, start.elapsed().as_secs_f64())?;
    Ok(MhRun {
        summary,
        acceptance_rate,
        proposal_sd,
    })
}

pub fn cmd_oracle(args: &OracleArgs) -> CliResult<PathBuf> {
    let cfg = ExperimentConfig::resolve(&args.experiment, false)?;
    let proposal_sd = args
        .proposal_sd
        .unwrap_or_else(|| default_proposal_sd(cfg.model));
    with_threads(cfg.threads, || {
        oracle_experiment(&cfg, args.mh, proposal_sd)
    })?
}

pub fn oracle_experiment(cfg: &ExperimentConfig, mh: bool, proposal_sd: f64) -> CliResult<PathBuf> {
    let data = load_dataset(&cfg.data)?;
    let mut echo = cfg.echo();
    let report = if mh {
        let setup = build_model(cfg.model, &data, cfg.fixed, cfg.laplace_init)?;
        let run = mh_oracle(
            cfg.model,
            &data,
            &cfg.prior,
            &setup,
            proposal_sd,
            cfg.run.seed,
        )?;
        echo.insert("mh".into(), "true".into());
        echo.insert("proposal-sd".into(), proposal_sd.to_string());
        OracleReport {
            summary: run.summary,
            model: cfg.model.to_string(),
            prior: cfg.prior.to_string(),
            method: "mh".into(),
            posterior: None,
            fixed: setup.fixed,
            proposal_sd: Some(run.proposal_sd),
            chains: Some(MH_CHAINS),
            acceptance_rate: Some(run.acceptance_rate),
            config: echo,
        }
    } else {
        let start = Instant::now();
        let post = conjugate_posterior(&cfg.model.to_string(), &cfg.prior, &data)?;
        let mut summary = post.summary();
        summary.runtime_seconds = start.elapsed().as_secs_f64();
        OracleReport {
            summary,
            model: cfg.model.to_string(),
            prior: cfg.prior.to_string(),
            method: "analytic".into(),
            posterior: Some(post),
            fixed: BTreeMap::new(),
            proposal_sd: None,
            chains: None,
            acceptance_rate: None,
            config: echo,
        }
    };
    create_out_dir(&cfg.out)?;
    write_json(&cfg.out.join("summary.json"), &report)?;
    Ok(cfg.out.clone())
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    pub distribution: SimDistribution,
    /// Success probability (bernoulli).
    #[arg(long)]
    pub p: Option<f64>,
    /// Rate (poisson).
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<PathBuf> {
    let param = match args.distribution {
        SimDistribution::Bernoulli => args
            .p
            .ok_or_else(|| CliError::config("bernoulli needs --p"))?,
        SimDistribution::Poisson => args
            .lambda
            .ok_or_else(|| CliError::config("poisson needs --lambda"))?,
    };
    let values = simulate(args.distribution, param, args.n, args.seed)?;
    let text: String = values.iter().map(|v| format!("{v}\n")).collect();
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_out_dir(parent)?;
    }
    fs::write(&args.out, text)
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", args.out.display())))?;
    Ok(args.out.clone())
}
