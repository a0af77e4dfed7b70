//! Experiment configuration: flags, flat `key = value` files and the config
//! echo stored in `summary.json`, merged into one resolved setup.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ballpit::{PriorSpec, RunConfig};
use clap::Args;

use crate::error::{CliError, CliResult};

pub const DEFAULT_BALLS: usize = 80;
pub const DEFAULT_EPSILON: f64 = 0.01;
pub const DEFAULT_STEPS: usize = 1000;
pub const DEFAULT_WARMUP: usize = 500;
pub const DEFAULT_STUCK_LAG: usize = 10;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_OUT: &str = "ballpit-out";
pub const DEFAULT_ETA_PRIOR: PriorSpec = PriorSpec::Uniform { lo: 0.0, hi: 6.0 };

const KEYS: [&str; 16] = [
    "model",
    "data",
    "prior",
    "balls",
    "epsilon",
    "sigma2",
    "steps",
    "warmup",
    "stuck-lag",
    "seed",
    "threads",
    "out",
    "fixed",
    "laplace-init",
    "mh",
    "proposal-sd",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Bernoulli,
    Poisson,
    CauchyMu,
    CauchyEta,
}

impl ModelKind {
    pub fn is_cauchy(self) -> bool {
        matches!(self, ModelKind::CauchyMu | ModelKind::CauchyEta)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Bernoulli => "bernoulli",
            ModelKind::Poisson => "poisson",
            ModelKind::CauchyMu => "cauchy-mu",
            ModelKind::CauchyEta => "cauchy-eta",
        })
    }
}

impl FromStr for ModelKind {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s.trim() {
            "bernoulli" => Ok(ModelKind::Bernoulli),
            "poisson" => Ok(ModelKind::Poisson),
            "cauchy-mu" => Ok(ModelKind::CauchyMu),
            "cauchy-eta" => Ok(ModelKind::CauchyEta),
            other => Err(CliError::config(format!(
                "unknown model `{other}` (expected bernoulli, poisson, cauchy-mu or cauchy-eta)"
            ))),
        }
    }
}

/// Coordinate held fixed in a Cauchy run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fixed {
    Mu(f64),
    Eta(f64),
}

impl fmt::Display for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fixed::Mu(v) => write!(f, "mu={v}"),
            Fixed::Eta(v) => write!(f, "eta={v}"),
        }
    }
}

impl FromStr for Fixed {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let bad = || CliError::config(format!("--fixed expects eta=<v> or mu=<v>, got `{s}`"));
        let (key, value) = s.split_once('=').ok_or_else(bad)?;
        let v: f64 = value.trim().parse().map_err(|_| bad())?;
        if !v.is_finite() {
            return Err(bad());
        }
        match key.trim() {
            "mu" => Ok(Fixed::Mu(v)),
            "eta" => Ok(Fixed::Eta(v)),
            _ => Err(bad()),
        }
    }
}

/// Experiment flags shared by `run` and `oracle`.
#[derive(Debug, Clone, Default, Args)]
pub struct ExperimentArgs {
    /// Flat `key = value` file or a previous summary.json; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// bernoulli | poisson | cauchy-mu | cauchy-eta
    #[arg(long)]
    pub model: Option<String>,
    /// One value per line, optionally under a single header line.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// beta:a,b | uniform:lo,hi | normal:mean,var | jeffreys-poisson:lo,hi | point:v
    #[arg(long)]
    pub prior: Option<String>,
    #[arg(long)]
    pub balls: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub sigma2: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub warmup: Option<usize>,
    /// Consecutive rejections before a ball is reseeded from the prior.
    #[arg(long)]
    pub stuck_lag: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Value of the frozen Cauchy coordinate: eta=<v> or mu=<v>.
    #[arg(long)]
    pub fixed: Option<String>,
    /// Freeze the other Cauchy coordinate at the joint posterior mode.
    #[arg(long)]
    pub laplace_init: bool,
}

impl ExperimentArgs {
    fn to_map(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                m.insert(k.to_string(), v);
            }
        };
        put("model", self.model.clone());
        put("data", self.data.as_ref().map(|p| p.display().to_string()));
        put("prior", self.prior.clone());
        put("balls", self.balls.map(|v| v.to_string()));
        put("epsilon", self.epsilon.map(|v| v.to_string()));
        put("sigma2", self.sigma2.map(|v| v.to_string()));
        put("steps", self.steps.map(|v| v.to_string()));
        put("warmup", self.warmup.map(|v| v.to_string()));
        put("stuck-lag", self.stuck_lag.map(|v| v.to_string()));
        put("seed", self.seed.map(|v| v.to_string()));
        put("threads", self.threads.map(|v| v.to_string()));
        put("out", self.out.as_ref().map(|p| p.display().to_string()));
        put("fixed", self.fixed.clone());
        put(
            "laplace-init",
            self.laplace_init.then(|| "true".to_string()),
        );
        m
    }
}

/// Reads a flat config file, or the `config` object of a summary.json.
pub fn load_config_file(path: &Path) -> CliResult<BTreeMap<String, String>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    let map = if text.trim_start().starts_with('{') {
        parse_echo(&text)
    } else {
        parse_flat(&text)
    }
    .map_err(|msg| CliError::config(format!("{}: {msg}", path.display())))?;
    if let Some(bad) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(CliError::config(format!(
            "{}: unknown key `{bad}`",
            path.display()
        )));
    }
    Ok(map)
}

fn parse_flat(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key = value", i + 1))?;
        map.insert(
            k.trim().trim_start_matches("--").to_string(),
            v.trim().to_string(),
        );
    }
    Ok(map)
}

fn parse_echo(text: &str) -> Result<BTreeMap<String, String>, String> {
    let json: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let obj = json
        .get("config")
        .and_then(|c| c.as_object())
        .ok_or("summary has no `config` object")?;
    obj.iter()
        .map(|(k, v)| {
            let s = match v {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Number(n) => n.to_string(),
                serde_json::Value::Bool(b) => b.to_string(),
                other => return Err(format!("`{k}` has unsupported value {other}")),
            };
            Ok((k.clone(), s))
        })
        .collect()
}

/// Fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    pub data: PathBuf,
    pub prior: PriorSpec,
    pub run: RunConfig,
    pub fixed: Option<Fixed>,
    pub laplace_init: bool,
    pub threads: Option<usize>,
    pub out: PathBuf,
}

fn parse_num<T: FromStr>(map: &BTreeMap<String, String>, key: &str) -> CliResult<Option<T>> {
    map.get(key)
        .map(|v| {
            v.parse::<T>()
                .map_err(|_| CliError::config(format!("`{key}`: cannot parse `{v}`")))
        })
        .transpose()
}

impl ExperimentConfig {
    /// Merges the optional config file with flags. `sigma2` is mandatory when
    /// `need_sigma2` is set; everything else except model and data has a default.
    pub fn resolve(args: &ExperimentArgs, need_sigma2: bool) -> CliResult<Self> {
        let mut map = match &args.config {
            Some(p) => load_config_file(p)?,
            None => BTreeMap::new(),
        };
        map.extend(args.to_map());
        Self::from_map(&map, need_sigma2)
    }

    pub fn from_map(map: &BTreeMap<String, String>, need_sigma2: bool) -> CliResult<Self> {
        let model: ModelKind = map
            .get("model")
            .ok_or_else(|| CliError::config("--model is required"))?
            .parse()?;
        let data = PathBuf::from(
            map.get("data")
                .ok_or_else(|| CliError::config("--data is required"))?,
        );
        let prior = match map.get("prior") {
            Some(p) => p.parse::<PriorSpec>().map_err(CliError::from)?,
            None if model == ModelKind::CauchyEta => DEFAULT_ETA_PRIOR,
            None => return Err(CliError::config("--prior is required")),
        };
        let sigma2 = match parse_num::<f64>(map, "sigma2")? {
            Some(v) => v,
            None if need_sigma2 => {
                return Err(CliError::config(
                    "--sigma2 is required (no universal default)",
                ))
            }
            None => 1.0,
        };
        let run = RunConfig {
            n_balls: parse_num(map, "balls")?.unwrap_or(DEFAULT_BALLS),
            epsilon: parse_num(map, "epsilon")?.unwrap_or(DEFAULT_EPSILON),
            total_steps: parse_num(map, "steps")?.unwrap_or(DEFAULT_STEPS),
            warmup_steps: parse_num(map, "warmup")?.unwrap_or(DEFAULT_WARMUP),
            sigma2,
            stuck_lag_steps: parse_num(map, "stuck-lag")?.unwrap_or(DEFAULT_STUCK_LAG),
            seed: parse_num(map, "seed")?.unwrap_or(DEFAULT_SEED),
        };
        run.validate()?;
        if run.n_balls < 2 {
            return Err(CliError::config(
                "at least 2 balls are needed for the MCSE and R-hat summaries",
            ));
        }
        let fixed = map.get("fixed").map(|f| f.parse::<Fixed>()).transpose()?;
        let laplace_init = match map.get("laplace-init").map(String::as_str) {
            None | Some("false") => false,
            Some("true") => true,
            Some(other) => {
                return Err(CliError::config(format!(
                    "`laplace-init`: expected true or false, got `{other}`"
                )))
            }
        };
        match (model, fixed) {
            (ModelKind::CauchyMu, Some(Fixed::Mu(_))) => {
                return Err(CliError::config("cauchy-mu samples mu; fix eta instead"))
            }
            (ModelKind::CauchyEta, Some(Fixed::Eta(_))) => {
                return Err(CliError::config("cauchy-eta samples eta; fix mu instead"))
            }
            (m, None) if m.is_cauchy() && !laplace_init => {
                return Err(CliError::config(format!(
                    "{m} needs --fixed or --laplace-init"
                )))
            }
            (m, Some(_)) if !m.is_cauchy() => {
                return Err(CliError::config(format!("--fixed does not apply to {m}")))
            }
            _ => {}
        }
        let threads = parse_num::<usize>(map, "threads")?;
        if threads == Some(0) {
            return Err(CliError::config("--threads must be at least 1"));
        }
        let out = PathBuf::from(map.get("out").map(String::as_str).unwrap_or(DEFAULT_OUT));
        Ok(ExperimentConfig {
            model,
            data,
            prior,
            run,
            fixed,
            laplace_init,
            threads,
            out,
        })
    }

    /// Flat echo of every resolved setting; feeding it back through
    /// [`ExperimentConfig::from_map`] gives the same configuration.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let data = fs::canonicalize(&self.data).unwrap_or_else(|_| self.data.clone());
        m.insert("model".into(), self.model.to_string());
        m.insert("data".into(), data.display().to_string());
        m.insert("prior".into(), self.prior.to_string());
        m.insert("balls".into(), self.run.n_balls.to_string());
        m.insert("epsilon".into(), self.run.epsilon.to_string());
        m.insert("sigma2".into(), self.run.sigma2.to_string());
        m.insert("steps".into(), self.run.total_steps.to_string());
        m.insert("warmup".into(), self.run.warmup_steps.to_string());
        m.insert("stuck-lag".into(), self.run.stuck_lag_steps.to_string());
        m.insert("seed".into(), self.run.seed.to_string());
        m.insert("out".into(), self.out.display().to_string());
        if let Some(f) = self.fixed {
            m.insert("fixed".into(), f.to_string());
        }
        if self.laplace_init {
            m.insert("laplace-init".into(), "true".into());
        }
        if let Some(t) = self.threads {
            m.insert("threads".into(), t.to_string());
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> BTreeMap<String, String> {
        [
            ("model", "bernoulli"),
            ("data", "x.txt"),
            ("prior", "beta:1,1"),
            ("sigma2", "1"),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
    }

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::from_map(&base(), true).unwrap();
        assert_eq!(c.run.n_balls, DEFAULT_BALLS);
        assert_eq!(c.run.total_steps, DEFAULT_STEPS);
        assert_eq!(c.run.stuck_lag_steps, DEFAULT_STUCK_LAG);
        assert_eq!(c.out, PathBuf::from(DEFAULT_OUT));
    }

    #[test]
    fn echo_round_trips() {
        let mut m = base();
        m.insert("model".into(), "cauchy-mu".into());
        m.insert("prior".into(), "uniform:0,100".into());
        m.insert("fixed".into(), "eta=2.754".into());
        m.insert("epsilon".into(), "0.005".into());
        let c = ExperimentConfig::from_map(&m, true).unwrap();
        assert_eq!(ExperimentConfig::from_map(&c.echo(), true).unwrap(), c);
    }

    #[test]
    fn missing_sigma2_is_a_config_error() {
        let mut m = base();
        m.remove("sigma2");
        assert_eq!(ExperimentConfig::from_map(&m, true).unwrap_err().code, 2);
        assert!(ExperimentConfig::from_map(&m, false).is_ok());
    }

    #[test]
    fn cauchy_needs_a_frozen_coordinate() {
        let mut m = base();
        m.insert("model".into(), "cauchy-eta".into());
        m.remove("prior");
        assert_eq!(ExperimentConfig::from_map(&m, true).unwrap_err().code, 2);
        m.insert("laplace-init".into(), "true".into());
        let c = ExperimentConfig::from_map(&m, true).unwrap();
        assert_eq!(c.prior, DEFAULT_ETA_PRIOR);
        m.insert("fixed".into(), "eta=1".into());
        assert!(ExperimentConfig::from_map(&m, true).is_err());
    }

    #[test]
    fn rejects_bad_values() {
        for (k, v) in [
            ("balls", "1"),
            ("balls", "x"),
            ("warmup", "1000"),
            ("prior", "beta:0,1"),
            ("model", "gamma"),
            ("threads", "0"),
            ("fixed", "eta=1"),
        ] {
            let mut m = base();
            m.insert(k.into(), v.into());
            assert_eq!(
                ExperimentConfig::from_map(&m, true).unwrap_err().code,
                2,
                "{k}={v}"
            );
        }
    }

    #[test]
    fn flat_file_parsing() {
        let m = parse_flat("# comment\nmodel = poisson\n--sigma2=100  # inline\n\n").unwrap();
        assert_eq!(m["model"], "poisson");
        assert_eq!(m["sigma2"], "100");
        assert!(parse_flat("model poisson").is_err());
    }

    #[test]
    fn echo_parsing_accepts_numbers_and_strings() {
        let m =
            parse_echo(r#"{"mean": 1.0, "config": {"model": "poisson", "balls": 80}}"#).unwrap();
        assert_eq!(m["balls"], "80");
        assert!(parse_echo(r#"{"mean": 1.0}"#).is_err());
    }
}
