//! Settings resolution: command-line flags override an optional
//! `key=value` config file, which overrides the built-in defaults.

use std::collections::HashMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use rmq_core::rmq::{BoundaryMode, Schedule};
use rmq_core::schemes::Scheme;
use rmq_core::sde_models::{cev_model, gbm_model, Cev, CevParams, Gbm, GbmParams, SdeModel};

use crate::UsageError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Gbm,
    Cev,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub fn parse_value<T: FromStr>(s: &str) -> std::result::Result<T, String>
where
    T::Err: Display,
{
    s.trim().parse::<T>().map_err(|e| e.to_string())
}

/// Flags shared by every command. Each may also be set in the config file
/// under the same name (`iters_vq` and `iters-vq` are equivalent).
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Config file of `key=value` lines.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub model: Option<ModelKind>,
    #[arg(long, global = true)]
    pub s0: Option<f64>,
    /// Risk-free rate.
    #[arg(long, global = true)]
    pub r: Option<f64>,
    /// GBM volatility.
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    /// CEV elasticity.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// CEV instantaneous lognormal volatility.
    #[arg(long = "sigma-ln", global = true)]
    pub sigma_ln: Option<f64>,
    /// euler, milstein or weak2.
    #[arg(long, global = true, value_parser = parse_value::<Scheme>)]
    pub scheme: Option<Scheme>,
    /// free, absorbing or reflecting.
    #[arg(long, global = true, value_parser = parse_value::<BoundaryMode>)]
    pub boundary: Option<BoundaryMode>,
    /// Horizon in years.
    #[arg(long = "T", global = true)]
    pub horizon: Option<f64>,
    /// Number of time steps.
    #[arg(long = "K", global = true)]
    pub steps: Option<usize>,
    /// Codewords per step.
    #[arg(long = "N", global = true)]
    pub n: Option<usize>,
    #[arg(long = "iters-vq", global = true)]
    pub iters_vq: Option<usize>,
    #[arg(long = "iters-rmq", global = true)]
    pub iters_rmq: Option<usize>,
    /// Seed for Monte Carlo references.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file (stdout if absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelSpec {
    Gbm(GbmParams),
    Cev(CevParams),
}

pub enum Model {
    Gbm(Gbm),
    Cev(Cev),
}

impl Model {
    pub fn as_sde(&self) -> &dyn SdeModel {
        match self {
            Model::Gbm(m) => m,
            Model::Cev(m) => m,
        }
    }
}

impl ModelSpec {
    pub fn s0(&self) -> f64 {
        match self {
            ModelSpec::Gbm(p) => p.s0,
            ModelSpec::Cev(p) => p.s0,
        }
    }

    pub fn r(&self) -> f64 {
        match self {
            ModelSpec::Gbm(p) => p.r,
            ModelSpec::Cev(p) => p.r,
        }
    }

    pub fn build(&self) -> Result<Model> {
        let model = match *self {
            ModelSpec::Gbm(p) => Model::Gbm(gbm_model(p)?),
            ModelSpec::Cev(p) => Model::Cev(cev_model(p)?),
        };
        Ok(model)
    }
}

/// Fully resolved settings.
#[derive(Debug, Clone)]
pub struct Settings {
    pub model: ModelSpec,
    pub scheme: Option<Scheme>,
    pub boundary: BoundaryMode,
    pub horizon: f64,
    pub steps: usize,
    pub n: Option<usize>,
    pub iters_vq: usize,
    pub iters_rmq: usize,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl Settings {
    pub fn schedule(&self, n: usize) -> Result<Schedule> {
        Schedule::uniform(self.horizon, self.steps, n, self.iters_vq, self.iters_rmq)
            .map_err(|e| UsageError(e.to_string()).into())
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| {
            UsageError("Monte Carlo references need an explicit --seed".into()).into()
        })
    }
}

const KEYS: &[&str] = &[
    "model",
    "s0",
    "r",
    "sigma",
    "alpha",
    "sigma-ln",
    "scheme",
    "boundary",
    "T",
    "K",
    "N",
    "iters-vq",
    "iters-rmq",
    "seed",
    "threads",
    "out",
    "format",
];

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str) -> Result<HashMap<String, String>> {
    let mut map = HashMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            UsageError(format!(
                "config line {}: expected key=value, got {line:?}",
                no + 1
            ))
        })?;
        let key = k.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(UsageError(format!(
                "config line {}: unknown key {:?}",
                no + 1,
                k.trim()
            ))
            .into());
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

fn load_config(path: &Path) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read config file {}: {e}", path.display())))?;
    parse_config_text(&text)
}

struct Layer<'a> {
    file: &'a HashMap<String, String>,
}

impl Layer<'_> {
    fn get<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            None => Ok(None),
            Some(v) => parse_value::<T>(v)
                .map(Some)
                .map_err(|e| UsageError(format!("config key {key}: {e}")).into()),
        }
    }
}

impl FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        <ModelKind as ValueEnum>::from_str(s, true)
    }
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        <Format as ValueEnum>::from_str(s, true)
    }
}

pub fn resolve(args: &CommonArgs) -> Result<Settings> {
    let file = match &args.config {
        Some(p) => load_config(p)?,
        None => HashMap::new(),
    };
    let l = Layer { file: &file };
    let kind = l.get(args.model, "model")?.unwrap_or(ModelKind::Gbm);
    let s0 = l.get(args.s0, "s0")?.unwrap_or(100.0);
    let r = l.get(args.r, "r")?.unwrap_or(0.05);
    let model = match kind {
        ModelKind::Gbm => {
            let p = GbmParams {
                s0,
                r,
                sigma: l.get(args.sigma, "sigma")?.unwrap_or(0.3),
            };
            p.validate().map_err(|e| UsageError(e.to_string()))?;
            ModelSpec::Gbm(p)
        }
        ModelKind::Cev => {
            let p = CevParams {
                s0,
                r,
                alpha: l.get(args.alpha, "alpha")?.unwrap_or(0.7),
                sigma_ln: l.get(args.sigma_ln, "sigma-ln")?.unwrap_or(0.3),
            };
            p.validate().map_err(|e| UsageError(e.to_string()))?;
            ModelSpec::Cev(p)
        }
    };
    let settings = Settings {
        model,
        scheme: l.get(args.scheme, "scheme")?,
        boundary: l.get(args.boundary, "boundary")?.unwrap_or_default(),
        horizon: l.get(args.horizon, "T")?.unwrap_or(1.0),
        steps: l.get(args.steps, "K")?.unwrap_or(12),
        n: l.get(args.n, "N")?,
        iters_vq: l.get(args.iters_vq, "iters-vq")?.unwrap_or(50),
        iters_rmq: l.get(args.iters_rmq, "iters-rmq")?.unwrap_or(5),
        seed: l.get(args.seed, "seed")?,
        threads: l.get(args.threads, "threads")?,
        out: l.get(args.out.clone(), "out")?,
        format: l.get(args.format, "format")?.unwrap_or(Format::Csv),
    };
    if settings.threads == Some(0) {
        return Err(UsageError("--threads must be at least 1".into()).into());
    }
    Ok(settings)
}

/// `a:b:n` gives `n` equally spaced values from `a` to `b`.
pub fn parse_range(spec: &str) -> Result<Vec<f64>> {
    let bad = || UsageError(format!("expected a range a:b:n, got {spec:?}"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [a, b, n] = parts[..] else {
        return Err(bad().into());
    };
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if n == 0 || !a.is_finite() || !b.is_finite() {
        return Err(bad().into());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect())
}

/// Comma-separated step counts.
pub fn parse_steps_list(spec: &str) -> Result<Vec<usize>> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .ok()
                .filter(|&k| k > 0)
                .ok_or_else(|| UsageError(format!("invalid step count {s:?} in {spec:?}")).into())
        })
        .collect()
}

pub fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn std::io::Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("0.7:1.3:13").unwrap().len(), 13);
        assert_eq!(parse_range("1:2:1").unwrap(), vec![1.0]);
        assert!(parse_range("1:2").is_err());
        assert!(parse_range("1:2:0").is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(
            &path,
            "# comment\nK = 6\nN=40\nscheme=milstein\niters_vq=7\n",
        )
        .unwrap();
        let args = CommonArgs {
            config: Some(path),
            steps: Some(3),
            ..Default::default()
        };
        let s = resolve(&args).unwrap();
        assert_eq!(s.steps, 3);
        assert_eq!(s.n, Some(40));
        assert_eq!(s.scheme, Some(Scheme::Milstein));
        assert_eq!(s.iters_vq, 7);
        assert_eq!(s.iters_rmq, 5);
    }

    #[test]
    fn unknown_keys_are_usage_errors() {
        let err = parse_config_text("colour=blue\n").unwrap_err();
        assert!(err.downcast_ref::<UsageError>().is_some());
    }
}
