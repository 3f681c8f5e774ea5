//! Plain-text `key = value` experiment configuration.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::offspring::{mean_approx, Regime, Schedule, ZetaPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Annealed,
    Quenched,
    CoalescentLambda,
    CoalescentXi,
    Exact,
    CnScaling,
}

impl FromStr for Kind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "annealed" => Kind::Annealed,
            "quenched" => Kind::Quenched,
            "coalescent-lambda" => Kind::CoalescentLambda,
            "coalescent-xi" => Kind::CoalescentXi,
            "exact" => Kind::Exact,
            "cn-scaling" => Kind::CnScaling,
            _ => return Err(Error::Config(format!("unknown kind `{s}`"))),
        })
    }
}

/// Which limiting coalescent a rate table describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoalescentModel {
    Kingman,
    Delta0Beta,
    Delta0Pd,
    BetaPd,
}

impl CoalescentModel {
    /// Whether the model has simultaneous mergers.
    pub fn is_xi(self) -> bool {
        matches!(self, CoalescentModel::Delta0Pd | CoalescentModel::BetaPd)
    }
}

impl FromStr for CoalescentModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "kingman" => CoalescentModel::Kingman,
            "delta0-beta" => CoalescentModel::Delta0Beta,
            "delta0-pd" => CoalescentModel::Delta0Pd,
            "beta-pd" => CoalescentModel::BetaPd,
            _ => return Err(Error::Config(format!("unknown model `{s}`"))),
        })
    }
}

/// How replicate spectra are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    /// `M^{-1} Σ_j ℓ_i^{(j)} / L^{(j)}`, an estimate of `E[R_i]`.
    MeanOfRatios,
    /// `Σ_j ℓ_i^{(j)} / Σ_j L^{(j)}`, an estimate of `φ_i`, with a
    /// delta-method standard error.
    RatioOfMeans,
}

impl FromStr for Estimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "mean-of-ratios" => Estimator::MeanOfRatios,
            "ratio-of-means" => Estimator::RatioOfMeans,
            _ => return Err(Error::Config(format!("unknown estimator `{s}`"))),
        })
    }
}

/// `γ` given directly, or as the limit `K/(m + K)` of `ζ(N)/N → K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaSpec {
    Value(f64),
    Limit(Option<f64>),
}

impl GammaSpec {
    pub fn resolve(self, kappa: f64) -> Result<f64> {
        match self {
            GammaSpec::Value(g) => Ok(g),
            GammaSpec::Limit(None) => Ok(1.0),
            GammaSpec::Limit(Some(k)) => {
                let m = mean_approx(kappa)?;
                Ok(k / (m + k))
            }
        }
    }
}

impl FromStr for GammaSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if let Some(k) = s.strip_prefix("limit:") {
            if k == "inf" {
                return Ok(GammaSpec::Limit(None));
            }
            return Ok(GammaSpec::Limit(Some(parse_num("gamma", k)?)));
        }
        Ok(GammaSpec::Value(parse_num("gamma", s)?))
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("cannot parse `{v}` for key `{key}`")))
}

fn parse_schedule(v: &str) -> Result<Schedule> {
    Ok(match v {
        "A" => Schedule::TypeA,
        "B" => Schedule::TypeB,
        "inverse" => Schedule::InverseTimeScale,
        _ => return Err(Error::Config(format!("unknown schedule `{v}`"))),
    })
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("cannot parse `{v}` for key `{key}`"))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: Kind,
    /// Sample size.
    pub n: usize,
    /// Population size.
    pub pop_size: usize,
    pub reps: u64,
    pub seed: u64,
    pub threads: usize,
    pub out: Option<PathBuf>,
    pub model: CoalescentModel,
    pub regime: Regime,
    pub alpha: f64,
    pub kappa: f64,
    pub gamma: GammaSpec,
    pub c: f64,
    pub c_kappa: Option<f64>,
    pub beta: f64,
    pub normalize: bool,
    pub rho: f64,
    /// Fixed environment probability; otherwise taken from `schedule`.
    pub eps: Option<f64>,
    pub schedule: Option<Schedule>,
    pub zeta: ZetaPolicy,
    pub estimator: Estimator,
    /// Population sizes for `cn-scaling`.
    pub pop_sizes: Vec<usize>,
    pub max_generations: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: Kind::CoalescentLambda,
            n: 16,
            pop_size: 1000,
            reps: 10_000,
            seed: 1,
            threads: std::thread::available_parallelism().map_or(1, |p| p.get()),
            out: None,
            model: CoalescentModel::Delta0Beta,
            regime: Regime::TypeA,
            alpha: 1.0,
            kappa: 2.0,
            gamma: GammaSpec::Value(1.0),
            c: 1.0,
            c_kappa: None,
            beta: 1.5,
            normalize: false,
            rho: 0.0,
            eps: None,
            schedule: None,
            zeta: ZetaPolicy::NLogN,
            estimator: Estimator::MeanOfRatios,
            pop_sizes: vec![500, 1000, 2000],
            max_generations: crate::quenched::DEFAULT_MAX_GENERATIONS,
        }
    }
}

/// Splits `key = value` lines; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected `key = value`, got `{raw}`", lineno + 1))
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl ExperimentConfig {
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "kind" => self.kind = v.parse()?,
            "n" => self.n = parse_num(key, v)?,
            "N" => self.pop_size = parse_num(key, v)?,
            "reps" | "M" => self.reps = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "threads" => self.threads = parse_num(key, v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            "model" => self.model = v.parse()?,
            "regime" => self.regime = Regime::parse(v)?,
            "alpha" => self.alpha = parse_num(key, v)?,
            "kappa" => self.kappa = parse_num(key, v)?,
            "gamma" => self.gamma = v.parse()?,
            "c" => self.c = parse_num(key, v)?,
            "c_kappa" => self.c_kappa = Some(parse_num(key, v)?),
            "beta" => self.beta = parse_num(key, v)?,
            "normalize" => self.normalize = parse_bool(key, v)?,
            "rho" => self.rho = parse_num(key, v)?,
            "eps" => self.eps = Some(parse_num(key, v)?),
            "schedule" => self.schedule = Some(parse_schedule(v)?),
            "zeta" => self.zeta = ZetaPolicy::parse(v)?,
            "estimator" => self.estimator = v.parse()?,
            "N_list" => {
                self.pop_sizes = v
                    .split(',')
                    .map(|s| parse_num(key, s.trim()))
                    .collect::<Result<_>>()?
            }
            "max_generations" => self.max_generations = parse_num(key, v)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let mut cfg = Self::default();
        for (k, v) in pairs {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_pairs(&parse_pairs(&text)?)
    }

    /// Checks the ranges that do not depend on the model.
    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        if self.threads == 0 {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        if self.n < 2 {
            return Err(Error::Config("sample size n must be at least 2".into()));
        }
        if matches!(self.kind, Kind::Annealed | Kind::Quenched) && self.n > self.pop_size {
            return Err(Error::Config(format!(
                "sample size n = {} exceeds N = {}",
                self.n, self.pop_size
            )));
        }
        if self.kind == Kind::CnScaling {
            if self.pop_sizes.is_empty() {
                return Err(Error::Config("N_list is empty".into()));
            }
            if self.pop_sizes.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Config("N_list must be increasing".into()));
            }
        }
        if !(self.rho >= 0.0) || !self.rho.is_finite() {
            return Err(Error::Config(format!("rho must be a finite nonnegative number, got {}", self.rho)));
        }
        Ok(())
    }
}

/// Convenience for building configurations in code: `key=value` strings.
pub fn config_from_strs(pairs: &[&str]) -> Result<ExperimentConfig> {
    let mut ordered = Vec::new();
    for p in pairs {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got `{p}`")))?;
        ordered.push((k.trim().to_string(), v.trim().to_string()));
    }
    ExperimentConfig::from_pairs(&ordered)
}
