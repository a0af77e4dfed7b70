//! End-to-end reruns of the reference experiments, compared against an
//! oracle and against the published figures.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ballpit::diagnostics::summarize;
use ballpit::{conjugate_posterior, run_ensemble, Dataset, PosteriorSummary, PriorSpec, RunConfig};
use clap::{Args, ValueEnum};
use serde::Serialize;

use crate::commands::{
    build_model, default_proposal_sd, mh_oracle, with_threads, Setup, MH_CHAINS,
};
use crate::config::{ModelKind, DEFAULT_EPSILON, DEFAULT_STUCK_LAG};
use crate::data::{load_dataset, simulate, to_dataset, SimDistribution};
use crate::error::{CliError, CliResult};

pub const DATA_SIZE: usize = 200;
pub const BERNOULLI_P: f64 = 0.3;
pub const POISSON_RATE: f64 = 40.0;
pub const SINGLE_BALLS: usize = 80;
pub const CAUCHY_BALLS: usize = 100;
pub const CAUCHY_MU_PRIOR: PriorSpec = PriorSpec::Uniform { lo: 0.0, hi: 100.0 };
pub const CAUCHY_ETA_PRIOR: PriorSpec = PriorSpec::Uniform { lo: 0.0, hi: 6.0 };
pub const CAUCHY_MU_SIGMA2: f64 = 100.0;
pub const CAUCHY_ETA_SIGMA2: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    #[value(name = "bernoulli-uniform")]
    BernoulliUniform,
    #[value(name = "bernoulli-beta37")]
    BernoulliBeta37,
    #[value(name = "poisson-jeffreys")]
    PoissonJeffreys,
    #[value(name = "poisson-normal")]
    PoissonNormal,
    #[value(name = "cauchy")]
    Cauchy,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::BernoulliUniform => "bernoulli-uniform",
            Experiment::BernoulliBeta37 => "bernoulli-beta37",
            Experiment::PoissonJeffreys => "poisson-jeffreys",
            Experiment::PoissonNormal => "poisson-normal",
            Experiment::Cauchy => "cauchy",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ReproduceArgs {
    pub experiment: Experiment,
    /// Data file; defaults to simulated data, or the bundled fixture for `cauchy`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Seed of the simulated dataset.
    #[arg(long, default_value_t = 7)]
    pub data_seed: u64,
    /// Sampler seed (balls and Metropolis chains).
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Ensemble size (default 80, or 100 for `cauchy`).
    #[arg(long)]
    pub balls: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    #[arg(long, default_value_t = 500)]
    pub warmup: usize,
    #[arg(long, default_value_t = DEFAULT_STUCK_LAG)]
    pub stuck_lag: usize,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory (default: reproduce-<experiment>).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl ReproduceArgs {
    pub fn new(experiment: Experiment) -> Self {
        ReproduceArgs {
            experiment,
            data: None,
            data_seed: 7,
            seed: 1,
            balls: None,
            steps: 1000,
            warmup: 500,
            stuck_lag: DEFAULT_STUCK_LAG,
            threads: None,
            out: None,
        }
    }
}

/// One line of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub experiment: String,
    pub parameter: String,
    pub source: String,
    pub mean: f64,
    pub sd: f64,
    pub mcse: Option<f64>,
    pub quantiles: [f64; 5],
    pub runtime_seconds: Option<f64>,
    /// Balls or chains behind the estimate.
    pub draws: Option<usize>,
}

impl Row {
    fn from_summary(exp: Experiment, parameter: &str, source: &str, s: &PosteriorSummary) -> Self {
        Row {
            experiment: exp.name().into(),
            parameter: parameter.into(),
            source: source.into(),
            mean: s.mean,
            sd: s.sd,
            mcse: (s.n > 0).then_some(s.mcse),
            quantiles: s.quantiles.to_array(),
            runtime_seconds: Some(s.runtime_seconds),
            draws: (s.n > 0).then_some(s.n),
        }
    }

    fn published(exp: Experiment, parameter: &str, source: &str, p: &Published) -> Self {
        Row {
            experiment: exp.name().into(),
            parameter: parameter.into(),
            source: source.into(),
            mean: p.mean,
            sd: p.sd,
            mcse: None,
            quantiles: p.quantiles,
            runtime_seconds: p.runtime,
            draws: None,
        }
    }
}

struct Published {
    mean: f64,
    sd: f64,
    quantiles: [f64; 5],
    runtime: Option<f64>,
}

const fn published(mean: f64, sd: f64, quantiles: [f64; 5], runtime: Option<f64>) -> Published {
    Published {
        mean,
        sd,
        quantiles,
        runtime,
    }
}

/// Published (reference sampler, ball pit) rows for each experiment.
fn published_rows(exp: Experiment) -> Vec<(&'static str, &'static str, Published)> {
    match exp {
        Experiment::BernoulliUniform => vec![
            (
                "theta",
                "published-nuts",
                published(0.30, 0.03, [0.24, 0.28, 0.30, 0.32, 0.37], Some(34.23)),
            ),
            (
                "theta",
                "published-bpa",
                published(0.30, 0.03, [0.25, 0.28, 0.30, 0.32, 0.36], Some(0.71)),
            ),
        ],
        Experiment::BernoulliBeta37 => vec![
            (
                "theta",
                "published-nuts",
                published(0.30, 0.03, [0.24, 0.28, 0.30, 0.32, 0.37], Some(29.39)),
            ),
            (
                "theta",
                "published-bpa",
                published(0.30, 0.03, [0.25, 0.28, 0.30, 0.32, 0.37], Some(0.63)),
            ),
        ],
        Experiment::PoissonJeffreys => vec![
            (
                "lambda",
                "published-nuts",
                published(
                    40.35,
                    0.46,
                    [39.45, 40.04, 40.36, 40.64, 41.26],
                    Some(37.41),
                ),
            ),
            (
                "lambda",
                "published-bpa",
                published(40.34, 0.40, [39.58, 40.04, 40.34, 40.64, 41.08], Some(1.17)),
            ),
        ],
        Experiment::PoissonNormal => vec![
            (
                "lambda",
                "published-nuts",
                published(
                    40.36,
                    0.44,
                    [39.53, 40.07, 40.35, 40.65, 41.23],
                    Some(33.22),
                ),
            ),
            (
                "lambda",
                "published-bpa",
                published(40.32, 0.39, [39.60, 40.04, 40.33, 40.61, 41.05], Some(1.06)),
            ),
        ],
        Experiment::Cauchy => vec![
            (
                "mu",
                "published-nuts",
                published(25.54, 7.05, [12.58, 20.96, 25.12, 29.67, 40.96], None),
            ),
            (
                "mu",
                "published-bpa",
                published(25.1, 5.20, [15.50, 21.34, 25.02, 28.71, 35.44], None),
            ),
            (
                "eta",
                "published-nuts",
                published(2.84, 0.37, [2.11, 2.60, 2.85, 3.10, 3.57], None),
            ),
            (
                "eta",
                "published-bpa",
                published(2.84, 0.66, [2.00, 2.50, 2.79, 3.06, 3.79], None),
            ),
        ],
    }
}

pub fn darwin_fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join("darwin.txt")
}

fn run_config(args: &ReproduceArgs, balls: usize, sigma2: f64) -> RunConfig {
    RunConfig {
        n_balls: args.balls.unwrap_or(balls),
        epsilon: DEFAULT_EPSILON,
        total_steps: args.steps,
        warmup_steps: args.warmup,
        sigma2,
        stuck_lag_steps: args.stuck_lag,
        seed: args.seed,
    }
}

fn bpa_row(
    exp: Experiment,
    parameter: &str,
    prior: &PriorSpec,
    run: &RunConfig,
    setup: &Setup,
) -> CliResult<Row> {
    let out = run_ensemble(&*setup.model, prior, run)?;
    let s = summarize(&out.pooled, &out.post_warmup_chains(), out.runtime_seconds)?;
    Ok(Row::from_summary(exp, parameter, "bpa", &s))
}

fn single_parameter(
    exp: Experiment,
    args: &ReproduceArgs,
    kind: ModelKind,
    data: &Dataset,
    prior: PriorSpec,
    sigma2: f64,
) -> CliResult<Vec<Row>> {
    let parameter = if kind == ModelKind::Bernoulli {
        "theta"
    } else {
        "lambda"
    };
    let setup = build_model(kind, data, None, false)?;
    let run = run_config(args, SINGLE_BALLS, sigma2);
    run.validate()?;
    let mut rows = vec![bpa_row(exp, parameter, &prior, &run, &setup)?];
    match conjugate_posterior(&kind.to_string(), &prior, data) {
        Ok(post) => rows.push(Row::from_summary(
            exp,
            parameter,
            "oracle-analytic",
            &post.summary(),
        )),
        Err(ballpit::Error::NoConjugateForm { .. }) => {
            let mh = mh_oracle(
                kind,
                data,
                &prior,
                &setup,
                default_proposal_sd(kind),
                args.seed,
            )?;
            rows.push(Row::from_summary(exp, parameter, "oracle-mh", &mh.summary));
        }
        Err(e) => return Err(e.into()),
    }
    Ok(rows)
}

fn cauchy(args: &ReproduceArgs) -> CliResult<Vec<Row>> {
    let exp = Experiment::Cauchy;
    let path = args.data.clone().unwrap_or_else(darwin_fixture);
    if !path.exists() {
        return Err(CliError::data(format!(
            "plant-height data not found at {}",
            path.display()
        )));
    }
    let data = load_dataset(&path)?;
    let mut rows = Vec::new();
    for (kind, parameter, prior, sigma2) in [
        (ModelKind::CauchyMu, "mu", CAUCHY_MU_PRIOR, CAUCHY_MU_SIGMA2),
        (
            ModelKind::CauchyEta,
            "eta",
            CAUCHY_ETA_PRIOR,
            CAUCHY_ETA_SIGMA2,
        ),
    ] {
        let setup = build_model(kind, &data, None, true)?;
        let run = run_config(args, CAUCHY_BALLS, sigma2);
        run.validate()?;
        rows.push(bpa_row(exp, parameter, &prior, &run, &setup)?);
        let mh = mh_oracle(
            kind,
            &data,
            &prior,
            &setup,
            default_proposal_sd(kind),
            args.seed,
        )?;
        rows.push(Row::from_summary(exp, parameter, "oracle-mh", &mh.summary));
    }
    Ok(rows)
}

/// Runs the named experiment and returns its comparison rows, published
/// values included.
pub fn reproduce(args: &ReproduceArgs) -> CliResult<Vec<Row>> {
    let exp = args.experiment;
    let simulated = |dist, param| -> CliResult<Dataset> {
        match &args.data {
            Some(p) => load_dataset(p),
            None => to_dataset(&simulate(dist, param, DATA_SIZE, args.data_seed)?),
        }
    };
    let mut rows = match exp {
        Experiment::BernoulliUniform | Experiment::BernoulliBeta37 => {
            let data = simulated(SimDistribution::Bernoulli, BERNOULLI_P)?;
            let prior = if exp == Experiment::BernoulliUniform {
                PriorSpec::Uniform { lo: 0.0, hi: 1.0 }
            } else {
                PriorSpec::Beta { a: 3.0, b: 7.0 }
            };
            single_parameter(exp, args, ModelKind::Bernoulli, &data, prior, 1.0)?
        }
        Experiment::PoissonJeffreys | Experiment::PoissonNormal => {
            let data = simulated(SimDistribution::Poisson, POISSON_RATE)?;
            let prior = if exp == Experiment::PoissonJeffreys {
                PriorSpec::JeffreysPoisson { lo: 0.0, hi: 100.0 }
            } else {
                PriorSpec::Normal {
                    mean: data.mean(),
                    variance: 4.0,
                }
            };
            single_parameter(exp, args, ModelKind::Poisson, &data, prior, 100.0)?
        }
        Experiment::Cauchy => cauchy(args)?,
    };
    for (parameter, source, p) in published_rows(exp) {
        rows.push(Row::published(exp, parameter, source, &p));
    }
    Ok(rows)
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(String::new, |x| format!("{x:.digits$}"))
}

pub fn to_csv(rows: &[Row]) -> String {
    let mut s = String::from(
        "experiment,parameter,source,mean,sd,mcse,q0.025,q0.25,q0.5,q0.75,q0.975,runtime_seconds,draws\n",
    );
    for r in rows {
        let q = r.quantiles.map(|x| x.to_string()).join(",");
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.experiment,
            r.parameter,
            r.source,
            r.mean,
            r.sd,
            r.mcse.map_or_else(String::new, |x| x.to_string()),
            q,
            r.runtime_seconds
                .map_or_else(String::new, |x| x.to_string()),
            r.draws.map_or_else(String::new, |x| x.to_string()),
        );
    }
    s
}

pub fn to_text(rows: &[Row]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<18} {:<7} {:<16} {:>9} {:>8} {:>8} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "experiment",
        "param",
        "source",
        "mean",
        "sd",
        "mcse",
        "2.5%",
        "25%",
        "50%",
        "75%",
        "97.5%",
        "time(s)"
    );
    for r in rows {
        let q = r.quantiles;
        let _ = writeln!(
            s,
            "{:<18} {:<7} {:<16} {:>9.4} {:>8.4} {:>8} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9}",
            r.experiment,
            r.parameter,
            r.source,
            r.mean,
            r.sd,
            opt(r.mcse, 4),
            q[0],
            q[1],
            q[2],
            q[3],
            q[4],
            opt(r.runtime_seconds, 3),
        );
    }
    if rows.iter().any(|r| r.source == "oracle-mh") {
        let _ = writeln!(
            s,
            "\noracle-mh: {MH_CHAINS} pooled random-walk Metropolis chains"
        );
    }
    let _ = writeln!(s, "published-*: figures as originally reported");
    s
}

/// Runs the experiment and writes `comparison.csv` and `comparison.txt`.
pub fn cmd_reproduce(args: &ReproduceArgs) -> CliResult<(PathBuf, String)> {
    let rows = with_threads(args.threads, || reproduce(args))??;
    let dir = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("reproduce-{}", args.experiment.name())));
    fs::create_dir_all(&dir)
        .map_err(|e| CliError::io(format!("cannot create {}: {e}", dir.display())))?;
    let text = to_text(&rows);
    let write = |name: &str, body: &str| {
        let p = dir.join(name);
        fs::write(&p, body).map_err(|e| CliError::io(format!("cannot write {}: {e}", p.display())))
    };
    write("comparison.csv", &to_csv(&rows))?;
    write("comparison.txt", &text)?;
    Ok((dir, text))
}
