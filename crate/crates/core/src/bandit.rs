//! Round records, the policy contract and regret bookkeeping shared by
//! policies, environments and the harness.
//!
//! Arms are 0-indexed in this API. Everything that leaves the process
//! (CSV, CLI, FFI) reports them 1-indexed.

use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Error, Result};
use crate::gbose::EstimatorState;
use crate::linalg::dot;

/// Random generator handed to policies and environments.
pub type SimRng = ChaCha8Rng;

/// Tolerance on probability-vector normalization.
pub const PROB_TOL: f64 = 1e-12;

/// The `N` context vectors observed at one step, stored as a flat
/// row-major `N x d` block.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundContext {
    t: usize,
    n_arms: usize,
    dim: usize,
    data: Vec<f64>,
}

impl RoundContext {
    pub fn new(t: usize, n_arms: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if t == 0 {
            return Err(Error::invalid("time steps start at 1"));
        }
        if n_arms < 2 {
            return Err(Error::invalid(format!("need at least 2 arms, got {n_arms}")));
        }
        if dim == 0 {
            return Err(Error::invalid("context dimension must be positive"));
        }
        check_len("context block", data.len(), n_arms * dim)?;
        Ok(RoundContext {
            t,
            n_arms,
            dim,
            data,
        })
    }

    /// Builds a round from one vector per arm.
    pub fn from_arms(t: usize, arms: &[Vec<f64>]) -> Result<Self> {
        let dim = arms.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(arms.len() * dim);
        for (i, a) in arms.iter().enumerate() {
            check_len(&format!("context of arm {}", i + 1), a.len(), dim)?;
            data.extend_from_slice(a);
        }
        Self::new(t, arms.len(), dim, data)
    }

    #[inline]
    pub fn t(&self) -> usize {
        self.t
    }

    #[inline]
    pub fn n_arms(&self) -> usize {
        self.n_arms
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn arm(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn arms(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Arms whose context has Euclidean norm above 1 (the bounded-context
    /// assumption). Reported, never rejected.
    pub fn norm_violations(&self) -> Vec<usize> {
        self.arms()
            .enumerate()
            .filter(|(_, b)| dot(b, b) > 1.0 + 1e-9)
            .map(|(i, _)| i)
            .collect()
    }

    /// `sum_i weights[i] * b_i`.
    pub fn weighted_mean(&self, weights: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (w, b) in weights.iter().zip(self.arms()) {
            if *w == 0.0 {
                continue;
            }
            for (o, x) in out.iter_mut().zip(b) {
                *o += w * x;
            }
        }
        out
    }
}

/// Named scalar diagnostics attached to a decision.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics(Vec<(&'static str, f64)>);

impl Diagnostics {
    pub fn push(&mut self, name: &'static str, value: f64) {
        self.0.push((name, value));
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.iter().find(|(k, _)| *k == name).map(|(_, v)| *v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, f64)> + '_ {
        self.0.iter().copied()
    }
}

/// A policy's choice for one round.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub chosen: usize,
    /// Action-selection distribution over all `N` arms.
    pub distribution: Vec<f64>,
    /// `sum_i distribution[i] * b_i`.
    pub centered_mean: Vec<f64>,
    /// Arms eligible this round, ascending.
    pub surviving: Vec<usize>,
    pub diagnostics: Diagnostics,
}

impl Decision {
    /// Checks the structural invariants against the round it was made for.
    pub fn validate(&self, round: &RoundContext) -> Result<()> {
        let n = round.n_arms();
        check_len("arm distribution", self.distribution.len(), n)?;
        check_len("centered mean", self.centered_mean.len(), round.dim())?;
        if self.chosen >= n {
            return Err(Error::Internal(format!("chosen arm {} out of range", self.chosen)));
        }
        if self.distribution.iter().any(|p| *p < 0.0 || !p.is_finite()) {
            return Err(Error::Internal("negative or non-finite probability".into()));
        }
        let total: f64 = self.distribution.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::Internal(format!("distribution sums to {total}")));
        }
        for (i, p) in self.distribution.iter().enumerate() {
            if *p > 0.0 && self.surviving.binary_search(&i).is_err() {
                return Err(Error::Internal(format!("mass on eliminated arm {i}")));
            }
        }
        let mean = round.weighted_mean(&self.distribution);
        if mean
            .iter()
            .zip(&self.centered_mean)
            .any(|(a, b)| (a - b).abs() > PROB_TOL)
        {
            return Err(Error::Internal("centered mean does not match distribution".into()));
        }
        Ok(())
    }
}

/// Everything a policy learns from after playing a round.
#[derive(Debug, Clone, Copy)]
pub struct Feedback<'a> {
    pub reward: f64,
    pub round: &'a RoundContext,
    pub decision: &'a Decision,
}

impl Feedback<'_> {
    /// `b_{t,a_t}`.
    pub fn chosen_context(&self) -> &[f64] {
        self.round.arm(self.decision.chosen)
    }
}

/// Contract shared by GBOSE and the Thompson-sampling baselines.
///
/// `choose` never mutates learning state; all learning happens in `update`.
pub trait Policy: Send {
    fn name(&self) -> &str;

    /// Clears learned state for a run of `horizon` rounds in dimension `dim`.
    fn reset(&mut self, dim: usize, horizon: usize) -> Result<()>;

    fn choose(&self, round: &RoundContext, rng: &mut SimRng) -> Result<Decision>;

    fn update(&mut self, feedback: &Feedback<'_>) -> Result<()>;

    /// The policy's linear-coefficient estimator, when it keeps one.
    fn estimator(&self) -> Option<&EstimatorState> {
        None
    }
}

/// Index of the arm maximizing `<mu, b_i>`, lowest index on ties.
pub fn optimal_arm(mu: &[f64], round: &RoundContext) -> Result<usize> {
    check_len("coefficient vector", mu.len(), round.dim())?;
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, b) in round.arms().enumerate() {
        let v = dot(mu, b);
        if v > best_val {
            best = i;
            best_val = v;
        }
    }
    Ok(best)
}

/// `max_i <mu, b_i> - <mu, b_chosen>`; the confounder cancels and is not an input.
pub fn instant_regret(mu: &[f64], round: &RoundContext, chosen: usize) -> Result<f64> {
    check_len("coefficient vector", mu.len(), round.dim())?;
    if chosen >= round.n_arms() {
        return Err(Error::invalid(format!(
            "arm {} out of range 1..={}",
            chosen + 1,
            round.n_arms()
        )));
    }
    let best = round
        .arms()
        .map(|b| dot(mu, b))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((best - dot(mu, round.arm(chosen))).max(0.0))
}

/// First index of the maximum, `None` for an empty slice.
pub(crate) fn argmax(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        match best {
            Some((_, bv)) if v <= bv => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}
