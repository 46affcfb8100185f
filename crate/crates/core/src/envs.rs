//! Synthetic semiparametric environments.
//!
//! Rewards follow `r = <b, mu> + v(t) + eps` with a fixed `mu` per
//! replication, Gaussian noise and one of three confounders:
//!
//! * `I`: `v(t) = 0`
//! * `II`: `v(t) = log2(t + 1) sin(0.0005 t)^2 + t^(1/4)`
//! * `III`: `v(t) = -cos(0.0005 t) sqrt(|<b_{t,a*}, mu>|)`
//!
//! Custom confounders can be registered by tag with [`register_confounder`].

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bandit::{instant_regret, optimal_arm, RoundContext, SimRng};
use crate::error::{check_len, Error, Result};
use crate::linalg::{dot, norm2, MAX_DIM};

pub const DEFAULT_NOISE_VARIANCE: f64 = 0.12;

/// Action-independent reward shift.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Confounder {
    I,
    II,
    III,
    Custom(String),
}

impl Confounder {
    pub fn label(&self) -> &str {
        match self {
            Confounder::I => "I",
            Confounder::II => "II",
            Confounder::III => "III",
            Confounder::Custom(tag) => tag,
        }
    }

    pub fn parse(s: &str) -> Self {
        match s {
            "I" | "i" | "1" => Confounder::I,
            "II" | "ii" | "2" => Confounder::II,
            "III" | "iii" | "3" => Confounder::III,
            other => Confounder::Custom(other.to_string()),
        }
    }
}

impl fmt::Display for Confounder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// `v(t, <b_{t,a*}, mu>)` for a registered custom confounder.
pub type ConfounderFn = Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>;

fn registry() -> &'static RwLock<HashMap<String, ConfounderFn>> {
    static REGISTRY: OnceLock<RwLock<HashMap<String, ConfounderFn>>> = OnceLock::new();
    REGISTRY.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Makes `Confounder::Custom(tag)` resolvable. Re-registering a tag replaces it.
pub fn register_confounder(tag: &str, f: ConfounderFn) {
    registry()
        .write()
        .expect("confounder registry poisoned")
        .insert(tag.to_string(), f);
}

fn lookup_confounder(tag: &str) -> Option<ConfounderFn> {
    registry()
        .read()
        .expect("confounder registry poisoned")
        .get(tag)
        .cloned()
}

/// Value of the built-in confounders. Custom tags resolve through the registry.
pub fn confounder_value(confounder: &Confounder, t: usize, optimal_inner: f64) -> Result<f64> {
    let tf = t as f64;
    Ok(match confounder {
        Confounder::I => 0.0,
        Confounder::II => (tf + 1.0).log2() * (0.0005 * tf).sin().powi(2) + tf.powf(0.25),
        Confounder::III => -(0.0005 * tf).cos() * optimal_inner.abs().sqrt(),
        Confounder::Custom(tag) => {
            let f = lookup_confounder(tag)
                .ok_or_else(|| Error::config(format!("unknown confounder `{tag}`")))?;
            f(t, optimal_inner)
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MuSource {
    /// Each coordinate i.i.d. uniform on `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
    Fixed(Vec<f64>),
}

impl Default for MuSource {
    fn default() -> Self {
        MuSource::Uniform { lo: -0.5, hi: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContextMode {
    /// Arm 1 is `0_d`; arm `i >= 2` holds a unit-sphere draw in block `i - 1`
    /// of width `d / (N - 1)`.
    Block,
    /// Every arm is an independent uniform draw from the unit sphere in `R^d`.
    Sphere,
}

impl ContextMode {
    pub fn label(self) -> &'static str {
        match self {
            ContextMode::Block => "block",
            ContextMode::Sphere => "sphere",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentSpec {
    pub n_arms: usize,
    pub dim: usize,
    pub confounder: Confounder,
    pub noise_variance: f64,
    pub mu_source: MuSource,
    pub context_mode: ContextMode,
    pub seed: u64,
}

impl EnvironmentSpec {
    pub fn new(n_arms: usize, dim: usize, confounder: Confounder, context_mode: ContextMode) -> Result<Self> {
        let spec = EnvironmentSpec {
            n_arms,
            dim,
            confounder,
            noise_variance: DEFAULT_NOISE_VARIANCE,
            mu_source: MuSource::default(),
            context_mode,
            seed: 0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_arms < 2 {
            return Err(Error::config(format!("need at least 2 arms, got {}", self.n_arms)));
        }
        if self.dim == 0 || self.dim > MAX_DIM {
            return Err(Error::config(format!(
                "dimension must be in 1..={MAX_DIM}, got {}",
                self.dim
            )));
        }
        if self.context_mode == ContextMode::Block && !self.dim.is_multiple_of(self.n_arms - 1) {
            return Err(Error::config(format!(
                "block contexts need (N - 1) = {} to divide d = {}",
                self.n_arms - 1,
                self.dim
            )));
        }
        if !(self.noise_variance > 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::config(format!(
                "noise variance must be positive, got {}",
                self.noise_variance
            )));
        }
        match &self.mu_source {
            MuSource::Uniform { lo, hi } => {
                if !(lo <= hi && lo.is_finite() && hi.is_finite()) {
                    return Err(Error::config(format!("bad uniform range [{lo}, {hi}]")));
                }
            }
            MuSource::Fixed(mu) => {
                if mu.len() != self.dim {
                    return Err(Error::config(format!(
                        "fixed mu has length {}, expected {}",
                        mu.len(),
                        self.dim
                    )));
                }
            }
        }
        if let Confounder::Custom(tag) = &self.confounder {
            if lookup_confounder(tag).is_none() {
                return Err(Error::config(format!("unknown confounder `{tag}`")));
            }
        }
        Ok(())
    }
}

/// Which modelling assumption a run has broken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AssumptionViolation {
    /// `||b_{t,i}||_2 > 1`.
    ContextNorm,
    /// `||mu||_2 > 1`.
    CoefficientNorm,
    /// `|v(t)| > 1`.
    ConfounderBound,
}

/// Records bound violations, warning once per kind per run.
#[derive(Debug, Clone, Default)]
pub struct AssumptionMonitor {
    seen: Vec<(AssumptionViolation, usize)>,
}

impl AssumptionMonitor {
    pub fn report(&mut self, kind: AssumptionViolation, t: usize, detail: impl FnOnce() -> String) {
        if self.seen.iter().any(|(k, _)| *k == kind) {
            return;
        }
        log::warn!("assumption violated at t={t}: {}", detail());
        self.seen.push((kind, t));
    }

    /// Violations in the order first seen, with the step at which each appeared.
    pub fn warnings(&self) -> &[(AssumptionViolation, usize)] {
        &self.seen
    }

    pub fn count(&self, kind: AssumptionViolation) -> usize {
        self.seen.iter().filter(|(k, _)| *k == kind).count()
    }
}

/// Draws `mu` per the spec's source.
pub fn gen_mu(spec: &EnvironmentSpec, rng: &mut SimRng) -> Vec<f64> {
    match &spec.mu_source {
        MuSource::Uniform { lo, hi } => (0..spec.dim)
            .map(|_| if lo == hi { *lo } else { rng.random_range(*lo..=*hi) })
            .collect(),
        MuSource::Fixed(mu) => mu.clone(),
    }
}

/// Uniform draw from the unit sphere in `R^k`, written into `out`.
fn unit_sphere_into(out: &mut [f64], rng: &mut SimRng) {
    loop {
        for v in out.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let n = norm2(out);
        if n > 0.0 {
            for v in out.iter_mut() {
                *v /= n;
            }
            return;
        }
    }
}

/// Per-replication environment state.
#[derive(Debug, Clone)]
pub struct Environment {
    spec: EnvironmentSpec,
    mu: Vec<f64>,
    confounder_fn: Option<CustomFn>,
    noise_sd: f64,
    t: usize,
    rng: SimRng,
    cumulative_regret: f64,
    last_regret: f64,
    monitor: AssumptionMonitor,
}

#[derive(Clone)]
struct CustomFn(ConfounderFn);

impl fmt::Debug for CustomFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("<custom confounder>")
    }
}

impl Environment {
    /// Validates the spec and draws `mu` from the spec's seed.
    pub fn new(spec: EnvironmentSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = SimRng::seed_from_u64(spec.seed);
        let mu = gen_mu(&spec, &mut rng);
        let confounder_fn = match &spec.confounder {
            Confounder::Custom(tag) => Some(CustomFn(
                lookup_confounder(tag).ok_or_else(|| Error::config(format!("unknown confounder `{tag}`")))?,
            )),
            _ => None,
        };
        let mut monitor = AssumptionMonitor::default();
        let mu_norm = norm2(&mu);
        if mu_norm > 1.0 {
            monitor.report(AssumptionViolation::CoefficientNorm, 0, || {
                format!("||mu||_2 = {mu_norm:.4} exceeds 1")
            });
        }
        Ok(Environment {
            noise_sd: spec.noise_variance.sqrt(),
            spec,
            mu,
            confounder_fn,
            t: 0,
            rng,
            cumulative_regret: 0.0,
            last_regret: 0.0,
            monitor,
        })
    }

    pub fn spec(&self) -> &EnvironmentSpec {
        &self.spec
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    /// Index of the last generated round (0 before the first).
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn cumulative_regret(&self) -> f64 {
        self.cumulative_regret
    }

    pub fn last_regret(&self) -> f64 {
        self.last_regret
    }

    pub fn monitor(&self) -> &AssumptionMonitor {
        &self.monitor
    }

    /// Advances to the next step and draws its contexts.
    pub fn gen_contexts(&mut self) -> Result<RoundContext> {
        self.t += 1;
        let n = self.spec.n_arms;
        let d = self.spec.dim;
        let mut data = vec![0.0; n * d];
        match self.spec.context_mode {
            ContextMode::Block => {
                let width = d / (n - 1);
                for i in 1..n {
                    let start = i * d + (i - 1) * width;
                    unit_sphere_into(&mut data[start..start + width], &mut self.rng);
                }
            }
            ContextMode::Sphere => {
                for i in 0..n {
                    unit_sphere_into(&mut data[i * d..(i + 1) * d], &mut self.rng);
                }
            }
        }
        let round = RoundContext::new(self.t, n, d, data)?;
        if !round.norm_violations().is_empty() {
            self.monitor.report(AssumptionViolation::ContextNorm, self.t, || {
                "a context vector has norm above 1".to_string()
            });
        }
        Ok(round)
    }

    /// `v(t)` for the current step and round.
    pub fn confounder_at(&self, round: &RoundContext) -> Result<f64> {
        let best = optimal_arm(&self.mu, round)?;
        let optimal_inner = dot(round.arm(best), &self.mu);
        match &self.confounder_fn {
            Some(f) => Ok((f.0)(round.t(), optimal_inner)),
            None => confounder_value(&self.spec.confounder, round.t(), optimal_inner),
        }
    }

    /// Draws the reward of `chosen` and books its regret.
    pub fn realize_reward(&mut self, round: &RoundContext, chosen: usize) -> Result<f64> {
        check_len("round dimension", round.dim(), self.spec.dim)?;
        let v = self.confounder_at(round)?;
        if v.abs() > 1.0 {
            self.monitor.report(AssumptionViolation::ConfounderBound, round.t(), || {
                format!("|v(t)| = {:.6} exceeds 1", v.abs())
            });
        }
        let regret = instant_regret(&self.mu, round, chosen)?;
        self.last_regret = regret;
        self.cumulative_regret += regret;
        let eps: f64 = self.rng.sample(StandardNormal);
        Ok(dot(round.arm(chosen), &self.mu) + v + self.noise_sd * eps)
    }
}
