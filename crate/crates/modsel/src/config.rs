//! Experiment configuration: flat TOML files, CLI overrides and the
//! per-experiment defaults.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use modsel_core::env::{ActionSpace, BallVariant, NoiseConvention};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("{0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Fig1Topleft,
    Fig1Topright,
    Fig1Bottomleft,
    Fig1Bottomright,
    Custom,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::Fig1Topleft,
        Experiment::Fig1Topright,
        Experiment::Fig1Bottomleft,
        Experiment::Fig1Bottomright,
        Experiment::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Fig1Topleft => "fig1-topleft",
            Experiment::Fig1Topright => "fig1-topright",
            Experiment::Fig1Bottomleft => "fig1-bottomleft",
            Experiment::Fig1Bottomright => "fig1-bottomright",
            Experiment::Custom => "custom",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Experiment::Fig1Topleft => "parameter selection, 5 overlapping balls in 2-d",
            Experiment::Fig1Topright => "parameter selection, 5 disjoint balls in 2-d",
            Experiment::Fig1Bottomleft => "feature selection, d = 10, K = 50, M = 10",
            Experiment::Fig1Bottomright => "PS-OFUL vs regret balancing, 20 balls in 2-d",
            Experiment::Custom => "any environment and algorithm list given in the config",
        }
    }

    /// Environment used when none is configured.
    pub fn default_env(self) -> Option<EnvKind> {
        match self {
            Experiment::Fig1Topleft => Some(EnvKind::Ball(BallVariant::Overlapping)),
            Experiment::Fig1Topright => Some(EnvKind::Ball(BallVariant::Disjoint)),
            Experiment::Fig1Bottomleft => Some(EnvKind::Feature),
            Experiment::Fig1Bottomright => Some(EnvKind::Ball(BallVariant::Balancing20)),
            Experiment::Custom => None,
        }
    }

    pub fn default_horizon(self) -> usize {
        match self {
            Experiment::Fig1Bottomright => 100,
            _ => 1000,
        }
    }

    pub fn default_algorithms(self) -> Vec<Algorithm> {
        use Algorithm::*;
        match self {
            Experiment::Fig1Topleft | Experiment::Fig1Topright => vec![Oracle, PsOful, Itl],
            Experiment::Fig1Bottomleft => vec![Oracle, FsScb],
            Experiment::Fig1Bottomright => vec![PsOful, RegretBalancing],
            Experiment::Custom => Vec::new(),
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| invalid(format!("unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    PsOful,
    Itl,
    Oracle,
    OracleOful,
    FsScb,
    RegretBalancing,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::PsOful,
        Algorithm::Itl,
        Algorithm::Oracle,
        Algorithm::OracleOful,
        Algorithm::FsScb,
        Algorithm::RegretBalancing,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Algorithm::PsOful => "ps-oful",
            Algorithm::Itl => "itl",
            Algorithm::Oracle => "oracle",
            Algorithm::OracleOful => "oracle-oful",
            Algorithm::FsScb => "fs-scb",
            Algorithm::RegretBalancing => "regret-balancing",
        }
    }

    fn supports(self, env: EnvKind) -> bool {
        match env {
            EnvKind::Ball(_) => matches!(
                self,
                Algorithm::PsOful | Algorithm::Itl | Algorithm::Oracle | Algorithm::RegretBalancing
            ),
            EnvKind::Feature => matches!(self, Algorithm::FsScb | Algorithm::Oracle | Algorithm::OracleOful),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Algorithm {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.label() == s)
            .ok_or_else(|| invalid(format!("unknown algorithm `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvKind {
    Ball(BallVariant),
    Feature,
}

impl EnvKind {
    pub fn name(self) -> &'static str {
        match self {
            EnvKind::Ball(v) => v.name(),
            EnvKind::Feature => "feature",
        }
    }
}

impl FromStr for EnvKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        if s == "feature" {
            return Ok(EnvKind::Feature);
        }
        s.parse::<BallVariant>()
            .map(EnvKind::Ball)
            .map_err(|_| invalid(format!("unknown environment `{s}`")))
    }
}

/// δ used by the confidence radii.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaRule {
    OneOverT,
    Fixed(f64),
}

impl DeltaRule {
    /// min(δ, 1/4).
    pub fn resolve(self, horizon: usize) -> f64 {
        let raw = match self {
            DeltaRule::OneOverT => 1.0 / horizon as f64,
            DeltaRule::Fixed(d) => d,
        };
        raw.min(0.25)
    }
}

impl fmt::Display for DeltaRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeltaRule::OneOverT => f.write_str("one-over-T"),
            DeltaRule::Fixed(d) => write!(f, "{d}"),
        }
    }
}

impl FromStr for DeltaRule {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        if s == "one-over-T" {
            return Ok(DeltaRule::OneOverT);
        }
        let d: f64 = s
            .parse()
            .map_err(|_| invalid(format!("delta must be `one-over-T` or a number, got `{s}`")))?;
        if !(d > 0.0 && d < 1.0) {
            return Err(invalid(format!("delta must lie in (0, 1), got {d}")));
        }
        Ok(DeltaRule::Fixed(d))
    }
}

/// Config file contents. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RawConfig {
    pub experiment: Option<String>,
    pub env: Option<String>,
    pub horizon: Option<usize>,
    pub instances: Option<usize>,
    pub seed: Option<u64>,
    pub delta: Option<String>,
    pub algorithms: Option<Vec<String>>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    /// `unit-ball` or `finite`.
    pub actions: Option<String>,
    pub num_actions: Option<usize>,
    pub noise_level: Option<f64>,
    /// `std-dev` or `variance`.
    pub noise_convention: Option<String>,
    pub failure_tolerance: Option<f64>,
}

impl RawConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// Fields set in `other` win.
    pub fn merge(self, other: RawConfig) -> RawConfig {
        RawConfig {
            experiment: other.experiment.or(self.experiment),
            env: other.env.or(self.env),
            horizon: other.horizon.or(self.horizon),
            instances: other.instances.or(self.instances),
            seed: other.seed.or(self.seed),
            delta: other.delta.or(self.delta),
            algorithms: other.algorithms.or(self.algorithms),
            out: other.out.or(self.out),
            threads: other.threads.or(self.threads),
            actions: other.actions.or(self.actions),
            num_actions: other.num_actions.or(self.num_actions),
            noise_level: other.noise_level.or(self.noise_level),
            noise_convention: other.noise_convention.or(self.noise_convention),
            failure_tolerance: other.failure_tolerance.or(self.failure_tolerance),
        }
    }

    pub fn resolve(&self) -> Result<ExperimentConfig, ConfigError> {
        let experiment: Experiment = self
            .experiment
            .as_deref()
            .ok_or_else(|| invalid("no experiment given"))?
            .parse()?;
        let env = match (&self.env, experiment.default_env()) {
            (Some(e), _) => e.parse()?,
            (None, Some(e)) => e,
            (None, None) => return Err(invalid("custom experiments need an `env`")),
        };
        let horizon = self.horizon.unwrap_or_else(|| experiment.default_horizon());
        if horizon == 0 {
            return Err(invalid("horizon must be at least 1"));
        }
        let n_instances = self.instances.unwrap_or(50);
        if n_instances == 0 {
            return Err(invalid("need at least one instance"));
        }
        let delta_rule = match &self.delta {
            Some(d) => d.parse()?,
            None => DeltaRule::OneOverT,
        };
        let algorithms = match &self.algorithms {
            Some(list) => list.iter().map(|a| a.trim().parse()).collect::<Result<Vec<Algorithm>, _>>()?,
            None => experiment.default_algorithms(),
        };
        if algorithms.is_empty() {
            return Err(invalid("no algorithms given"));
        }
        for (i, a) in algorithms.iter().enumerate() {
            if algorithms[..i].contains(a) {
                return Err(invalid(format!("algorithm `{a}` listed twice")));
            }
            if !a.supports(env) {
                return Err(invalid(format!("algorithm `{a}` does not run on the `{}` environment", env.name())));
            }
        }
        let actions = match (self.actions.as_deref(), self.num_actions) {
            (None | Some("unit-ball"), None) => ActionSpace::UnitBall,
            (Some("unit-ball"), Some(_)) => return Err(invalid("num-actions needs actions = \"finite\"")),
            (None | Some("finite"), Some(k)) if k > 0 => ActionSpace::Finite(k),
            (Some("finite"), None) => ActionSpace::Finite(50),
            (Some(other), _) if other != "finite" => {
                return Err(invalid(format!("actions must be `unit-ball` or `finite`, got `{other}`")))
            }
            _ => return Err(invalid("num-actions must be at least 1")),
        };
        if env == EnvKind::Feature && self.actions.is_some() {
            return Err(invalid("the feature environment has a fixed action set"));
        }
        let noise_convention = match self.noise_convention.as_deref() {
            None => match env {
                EnvKind::Ball(_) => NoiseConvention::StdDev,
                EnvKind::Feature => NoiseConvention::Variance,
            },
            Some("std-dev") => NoiseConvention::StdDev,
            Some("variance") => NoiseConvention::Variance,
            Some(other) => return Err(invalid(format!("noise-convention must be `std-dev` or `variance`, got `{other}`"))),
        };
        let noise_level = self.noise_level.unwrap_or(0.1);
        if !(noise_level >= 0.0 && noise_level.is_finite()) {
            return Err(invalid("noise-level must be finite and non-negative"));
        }
        let failure_tolerance = self.failure_tolerance.unwrap_or(0.05);
        if !(0.0..=1.0).contains(&failure_tolerance) {
            return Err(invalid("failure-tolerance must lie in [0, 1]"));
        }
        Ok(ExperimentConfig {
            experiment,
            env,
            horizon,
            n_instances,
            master_seed: self.seed.unwrap_or(0),
            delta_rule,
            algorithms,
            output_dir: self.out.clone().unwrap_or_else(|| PathBuf::from("results")),
            threads: self.threads,
            actions,
            noise_level,
            noise_convention,
            failure_tolerance,
        })
    }
}

/// Fully resolved experiment settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub env: EnvKind,
    pub horizon: usize,
    pub n_instances: usize,
    pub master_seed: u64,
    pub delta_rule: DeltaRule,
    pub algorithms: Vec<Algorithm>,
    pub output_dir: PathBuf,
    /// Worker threads; `None` uses the rayon default.
    pub threads: Option<usize>,
    pub actions: ActionSpace,
    pub noise_level: f64,
    pub noise_convention: NoiseConvention,
    /// Largest tolerated fraction of failed instances.
    pub failure_tolerance: f64,
}

impl ExperimentConfig {
    /// Defaults of a named experiment.
    pub fn preset(experiment: Experiment) -> Result<Self, ConfigError> {
        RawConfig {
            experiment: Some(experiment.name().to_string()),
            ..RawConfig::default()
        }
        .resolve()
    }

    pub fn delta(&self) -> f64 {
        self.delta_rule.resolve(self.horizon)
    }

    pub fn instance_seed(&self, instance: usize) -> u64 {
        self.master_seed.wrapping_add(instance as u64)
    }

    /// Directory the outputs of this experiment go to.
    pub fn experiment_dir(&self) -> PathBuf {
        self.output_dir.join(self.experiment.name())
    }

    /// Config file reproducing this run.
    pub fn to_raw(&self) -> RawConfig {
        RawConfig {
            experiment: Some(self.experiment.name().to_string()),
            env: Some(self.env.name().to_string()),
            horizon: Some(self.horizon),
            instances: Some(self.n_instances),
            seed: Some(self.master_seed),
            delta: Some(self.delta_rule.to_string()),
            algorithms: Some(self.algorithms.iter().map(|a| a.label().to_string()).collect()),
            out: Some(self.output_dir.clone()),
            threads: self.threads,
            actions: match (self.env, self.actions) {
                (EnvKind::Feature, _) => None,
                (_, ActionSpace::UnitBall) => Some("unit-ball".to_string()),
                (_, ActionSpace::Finite(_)) => Some("finite".to_string()),
            },
            num_actions: match (self.env, self.actions) {
                (EnvKind::Ball(_), ActionSpace::Finite(k)) => Some(k),
                _ => None,
            },
            noise_level: Some(self.noise_level),
            noise_convention: Some(
                match self.noise_convention {
                    NoiseConvention::StdDev => "std-dev",
                    NoiseConvention::Variance => "variance",
                }
                .to_string(),
            ),
            failure_tolerance: Some(self.failure_tolerance),
        }
    }
}
