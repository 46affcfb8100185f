//! Experiment configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bandit::Policy;
use crate::baselines::{ActionCenteredTs, LinTs, SemiTs, TsConfig, DEFAULT_MC_SAMPLES};
use crate::envs::{Confounder, ContextMode, EnvironmentSpec, MuSource, DEFAULT_NOISE_VARIANCE};
use crate::error::{Error, Result};
use crate::gbose::{Gbose, GboseConfig};

/// The built-in three-setup, three-setting experiment.
pub const PAPER_CONFIG: &str = include_str!("../../configs/paper.toml");

pub const GRID_SIZE: usize = 11;

/// `10^x` for `x` evenly spaced on `[-2, 1]`.
pub fn default_gamma_grid() -> Vec<f64> {
    (0..GRID_SIZE)
        .map(|i| 10f64.powf(-2.0 + 3.0 * i as f64 / (GRID_SIZE - 1) as f64))
        .collect()
}

fn default_reps() -> usize {
    10
}

fn default_one() -> usize {
    1
}

fn default_record_every() -> usize {
    10
}

fn default_delta() -> f64 {
    0.05
}

fn default_ridge() -> f64 {
    1.0
}

fn default_scale() -> f64 {
    1.0
}

fn default_mc() -> usize {
    DEFAULT_MC_SAMPLES
}

fn default_p_min() -> f64 {
    0.1
}

fn default_p_max() -> f64 {
    0.9
}

fn default_noise() -> f64 {
    DEFAULT_NOISE_VARIANCE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub horizon: usize,
    #[serde(default = "default_reps")]
    pub n_reps: usize,
    #[serde(default = "default_gamma_grid")]
    pub gamma_grid: Vec<f64>,
    pub policies: Vec<PolicySpec>,
    pub environments: Vec<EnvSetup>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_one")]
    pub parallelism: usize,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn paper() -> Self {
        Self::from_toml_str(PAPER_CONFIG).expect("built-in config is valid")
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::config("horizon must be at least 1"));
        }
        if self.n_reps == 0 {
            return Err(Error::config("n_reps must be at least 1"));
        }
        if self.gamma_grid.is_empty() {
            return Err(Error::config("gamma_grid must not be empty"));
        }
        if let Some(g) = self.gamma_grid.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
            return Err(Error::config(format!("gamma multipliers must be positive, got {g}")));
        }
        if self.policies.is_empty() || self.environments.is_empty() {
            return Err(Error::config("need at least one policy and one environment"));
        }
        if self.parallelism == 0 {
            return Err(Error::config("parallelism must be at least 1"));
        }
        if self.record_every == 0 {
            return Err(Error::config("record_every must be at least 1"));
        }
        let mut labels: Vec<String> = self.policies.iter().map(|p| p.label()).collect();
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("policy labels must be unique"));
        }
        let mut env_labels: Vec<String> = self.environments.iter().map(|e| e.label()).collect();
        env_labels.sort();
        if env_labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("environment labels must be unique"));
        }
        for p in &self.policies {
            // building checks every policy parameter
            p.build(self.gamma_grid[0], self.horizon)?;
        }
        for e in &self.environments {
            e.spec(0)?;
        }
        Ok(())
    }

    /// Total number of episodes a sweep runs.
    pub fn n_cells(&self) -> usize {
        self.policies.len() * self.environments.len() * self.gamma_grid.len() * self.n_reps
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Internal(format!("serializing config: {e}")))
    }
}

/// Policy family plus its fixed parameters; the swept multiplier is applied
/// at build time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PolicySpec {
    Gbose {
        #[serde(default = "default_delta")]
        delta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ridge_override: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
    Ts {
        #[serde(default = "default_ridge")]
        ridge: f64,
        #[serde(default = "default_scale")]
        base_scale: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
    Semits {
        #[serde(default = "default_ridge")]
        ridge: f64,
        #[serde(default = "default_scale")]
        base_scale: f64,
        #[serde(default = "default_mc")]
        mc_samples: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
    Acts {
        #[serde(default = "default_ridge")]
        ridge: f64,
        #[serde(default = "default_scale")]
        base_scale: f64,
        #[serde(default = "default_p_min")]
        p_min: f64,
        #[serde(default = "default_p_max")]
        p_max: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
}

impl PolicySpec {
    pub fn label(&self) -> String {
        let (custom, default) = match self {
            PolicySpec::Gbose { label, .. } => (label, "GBOSE"),
            PolicySpec::Ts { label, .. } => (label, "TS"),
            PolicySpec::Semits { label, .. } => (label, "SemiTS"),
            PolicySpec::Acts { label, .. } => (label, "ActionTS"),
        };
        custom.clone().unwrap_or_else(|| default.to_string())
    }

    /// Instantiates the policy with exploration multiplier `multiplier`.
    pub fn build(&self, multiplier: f64, horizon: usize) -> Result<Box<dyn Policy>> {
        Ok(match self {
            PolicySpec::Gbose {
                delta,
                ridge_override,
                ..
            } => {
                let mut cfg = GboseConfig::new(horizon, *delta, multiplier)?;
                cfg.ridge_override = *ridge_override;
                Box::new(Gbose::new(cfg)?)
            }
            PolicySpec::Ts {
                ridge, base_scale, ..
            } => Box::new(LinTs::new(TsConfig {
                scale: base_scale * multiplier,
                ridge: *ridge,
                ..TsConfig::default()
            })?),
            PolicySpec::Semits {
                ridge,
                base_scale,
                mc_samples,
                ..
            } => Box::new(SemiTs::new(TsConfig {
                scale: base_scale * multiplier,
                ridge: *ridge,
                mc_samples: *mc_samples,
                ..TsConfig::default()
            })?),
            PolicySpec::Acts {
                ridge,
                base_scale,
                p_min,
                p_max,
                ..
            } => Box::new(ActionCenteredTs::new(TsConfig {
                scale: base_scale * multiplier,
                ridge: *ridge,
                clip: (*p_min, *p_max),
                ..TsConfig::default()
            })?),
        })
    }
}

/// One environment of the sweep; the seed is supplied per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSetup {
    pub n_arms: usize,
    pub dim: usize,
    /// `I`, `II`, `III` or a registered custom confounder tag.
    pub setting: String,
    pub context_mode: ContextMode,
    #[serde(default = "default_noise")]
    pub noise_variance: f64,
    /// Fixed coefficient vector; drawn per replication when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl EnvSetup {
    pub fn label(&self) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| format!("N{}-d{}-{}", self.n_arms, self.dim, self.setting))
    }

    pub fn confounder(&self) -> Confounder {
        Confounder::parse(&self.setting)
    }

    pub fn spec(&self, seed: u64) -> Result<EnvironmentSpec> {
        let spec = EnvironmentSpec {
            n_arms: self.n_arms,
            dim: self.dim,
            confounder: self.confounder(),
            noise_variance: self.noise_variance,
            mu_source: match &self.mu {
                Some(mu) => MuSource::Fixed(mu.clone()),
                None => MuSource::default(),
            },
            context_mode: self.context_mode,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}
