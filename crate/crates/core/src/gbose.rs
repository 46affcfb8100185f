//! GBOSE: action elimination followed by an explicit two-point action
//! distribution, with an orthogonalized (centered) ridge estimator.
//!
//! Each round:
//! 1. every arm `i` is kept iff `<mu_hat, b_j - b_i> <= gamma * ||b_i - b_j||_{B^-1}`
//!    for all `j`;
//! 2. among survivors the pair `(k, l)` farthest apart in the `B^-1` norm
//!    gets probability 1/2 each;
//! 3. the played context is centered by the distribution mean `b_bar`
//!    before it enters `B` and the response sum, which removes any
//!    action-independent reward shift from the estimate.

use rand::Rng;

use crate::bandit::{Decision, Diagnostics, Feedback, Policy, RoundContext, SimRng};
use crate::error::{check_len, Error, Result};
use crate::linalg::{dot, norm2, PsdState};

/// Relative slack allowed when checking the distribution constraint.
pub const CONSTRAINT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct GboseConfig {
    pub horizon: usize,
    pub delta: f64,
    /// Multiplies the theoretical filter width.
    pub gamma_multiplier: f64,
    /// Replaces the theoretical ridge when set.
    pub ridge_override: Option<f64>,
}

impl GboseConfig {
    pub fn new(horizon: usize, delta: f64, gamma_multiplier: f64) -> Result<Self> {
        let cfg = GboseConfig {
            horizon,
            delta,
            gamma_multiplier,
            ridge_override: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::invalid("horizon must be at least 1"));
        }
        check_delta(self.delta)?;
        if !(self.gamma_multiplier > 0.0 && self.gamma_multiplier.is_finite()) {
            return Err(Error::invalid(format!(
                "gamma multiplier must be positive, got {}",
                self.gamma_multiplier
            )));
        }
        if let Some(r) = self.ridge_override {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::invalid(format!("ridge override must be positive, got {r}")));
            }
        }
        Ok(())
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")))
    }
}

fn check_horizon_dim(d: usize, horizon: usize) -> Result<()> {
    if d == 0 || horizon == 0 {
        Err(Error::invalid("dimension and horizon must be positive"))
    } else {
        Ok(())
    }
}

/// `4 d ln(9T) + 8 ln(4T / delta)`.
pub fn theoretical_lambda(d: usize, horizon: usize, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    check_horizon_dim(d, horizon)?;
    let (d, t) = (d as f64, horizon as f64);
    Ok(4.0 * d * (9.0 * t).ln() + 8.0 * (4.0 * t / delta).ln())
}

/// `sqrt(lambda) + sqrt(27 d ln(1 + 2T/d) + 54 ln(4T / delta))`, the filter
/// width used by the algorithm.
pub fn theoretical_gamma(d: usize, horizon: usize, delta: f64, lambda: f64) -> Result<f64> {
    check_delta(delta)?;
    check_horizon_dim(d, horizon)?;
    check_lambda(lambda)?;
    let (d, t) = (d as f64, horizon as f64);
    Ok(lambda.sqrt() + (27.0 * d * (1.0 + 2.0 * t / d).ln() + 54.0 * (4.0 * t / delta).ln()).sqrt())
}

/// `sqrt(lambda) + sqrt(9 d ln(1 + T/(d lambda)) + 18 ln(T / delta))`, the
/// confidence radius of the two-arm concentration bound.
pub fn concentration_gamma(d: usize, horizon: usize, delta: f64, lambda: f64) -> Result<f64> {
    check_delta(delta)?;
    check_horizon_dim(d, horizon)?;
    check_lambda(lambda)?;
    let (d, t) = (d as f64, horizon as f64);
    Ok(lambda.sqrt() + (9.0 * d * (1.0 + t / (d * lambda)).ln() + 18.0 * (t / delta).ln()).sqrt())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("lambda must be positive, got {lambda}")))
    }
}

/// Ridge state `B`, response sum `S` and the estimate `mu_hat = B^{-1} S`.
#[derive(Debug, Clone)]
pub struct EstimatorState {
    psd: PsdState,
    weighted_sum: Vec<f64>,
    mu_hat: Vec<f64>,
}

impl EstimatorState {
    pub fn new(dim: usize, ridge: f64) -> Result<Self> {
        Ok(EstimatorState {
            psd: PsdState::new(dim, ridge)?,
            weighted_sum: vec![0.0; dim],
            mu_hat: vec![0.0; dim],
        })
    }

    pub fn dim(&self) -> usize {
        self.psd.dim()
    }

    pub fn psd(&self) -> &PsdState {
        &self.psd
    }

    pub fn weighted_sum(&self) -> &[f64] {
        &self.weighted_sum
    }

    pub fn mu_hat(&self) -> &[f64] {
        &self.mu_hat
    }

    /// `B += x x^T` without touching `S`; call [`refresh_estimate`](Self::refresh_estimate) after.
    pub fn add_design(&mut self, x: &[f64]) -> Result<()> {
        self.psd.rank1_update(x)
    }

    /// `S += x * response`.
    pub fn add_response(&mut self, x: &[f64], response: f64) -> Result<()> {
        check_len("response direction", x.len(), self.dim())?;
        for (s, xi) in self.weighted_sum.iter_mut().zip(x) {
            *s += xi * response;
        }
        Ok(())
    }

    /// `mu_hat = B^{-1} S`.
    pub fn refresh_estimate(&mut self) {
        self.psd.inv().mul_vec_into(&self.weighted_sum, &mut self.mu_hat);
    }

    /// `B += x x^T; S += x r; mu_hat = B^{-1} S`.
    pub fn observe(&mut self, x: &[f64], r: f64) -> Result<()> {
        self.add_design(x)?;
        self.add_response(x, r)?;
        self.refresh_estimate();
        Ok(())
    }

    /// `||mu_hat - mu||_B`.
    pub fn error_in_design_norm(&self, mu: &[f64]) -> Result<f64> {
        check_len("coefficient vector", mu.len(), self.dim())?;
        let diff: Vec<f64> = self.mu_hat.iter().zip(mu).map(|(a, b)| a - b).collect();
        Ok(self.psd.mat().quadratic_form(&diff).max(0.0).sqrt())
    }
}

/// Pairwise `||b_i - b_j||_{B^-1}` for one round, plus `<mu_hat, b_i>`.
#[derive(Debug, Clone)]
pub struct PairGeometry {
    n: usize,
    dist: Vec<f64>,
    scores: Vec<f64>,
}

impl PairGeometry {
    pub fn compute(state: &EstimatorState, round: &RoundContext) -> Result<Self> {
        check_len("round dimension", round.dim(), state.dim())?;
        let n = round.n_arms();
        let d = round.dim();
        let inv = state.psd().inv();
        let mut dist = vec![0.0; n * n];
        let mut diff = vec![0.0; d];
        for i in 0..n {
            for j in (i + 1)..n {
                for ((o, a), b) in diff.iter_mut().zip(round.arm(i)).zip(round.arm(j)) {
                    *o = a - b;
                }
                let q = inv.quadratic_form(&diff).max(0.0).sqrt();
                dist[i * n + j] = q;
                dist[j * n + i] = q;
            }
        }
        let scores = round.arms().map(|b| dot(state.mu_hat(), b)).collect();
        Ok(PairGeometry { n, dist, scores })
    }

    pub fn n_arms(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn score(&self, i: usize) -> f64 {
        self.scores[i]
    }
}

/// Arms that no other arm beats by more than `gamma` confidence widths.
/// Always nonempty: the arm with the highest estimated reward survives.
pub fn filter_actions(geom: &PairGeometry, gamma: f64) -> Vec<usize> {
    let n = geom.n_arms();
    (0..n)
        .filter(|&i| {
            (0..n).all(|j| geom.score(j) - geom.score(i) <= gamma * geom.distance(i, j))
        })
        .collect()
}

/// The surviving pair with the largest `B^-1` distance, `k <= l`, first in
/// lexicographic order on ties. A lone survivor or an all-zero distance
/// set collapses to `(m, m)` for the smallest survivor `m`.
pub fn select_pair(geom: &PairGeometry, surviving: &[usize]) -> Result<(usize, usize)> {
    let first = *surviving
        .first()
        .ok_or_else(|| Error::Internal("empty surviving set".into()))?;
    let mut best = (first, first);
    let mut best_dist = 0.0;
    for (a, &i) in surviving.iter().enumerate() {
        for &j in &surviving[a + 1..] {
            let dist = geom.distance(i, j);
            if dist > best_dist {
                best_dist = dist;
                best = (i.min(j), i.max(j));
            }
        }
    }
    Ok(best)
}

/// One half on each of `k` and `l` (all of it when `k == l`).
pub fn build_distribution(k: usize, l: usize, n: usize) -> Vec<f64> {
    let mut pi = vec![0.0; n];
    if k == l {
        pi[k] = 1.0;
    } else {
        pi[k] = 0.5;
        pi[l] = 0.5;
    }
    pi
}

/// Largest `||b_i - b_bar||^2 / (4 sum_j pi_j ||b_j - b_bar||^2)` over the
/// surviving arms, measured in `inv`. Values at most 1 satisfy the
/// distribution constraint; a zero right side with zero left sides yields 0.
pub fn distribution_constraint_ratio(
    psd: &PsdState,
    round: &RoundContext,
    decision: &Decision,
) -> Result<f64> {
    let centered = |i: usize| -> Vec<f64> {
        round
            .arm(i)
            .iter()
            .zip(&decision.centered_mean)
            .map(|(a, b)| a - b)
            .collect()
    };
    let mut rhs = 0.0;
    for (j, p) in decision.distribution.iter().enumerate() {
        if *p > 0.0 {
            rhs += p * psd.mahalanobis_sq(&centered(j))?;
        }
    }
    rhs *= 4.0;
    let mut worst = 0.0f64;
    for &i in &decision.surviving {
        let lhs = psd.mahalanobis_sq(&centered(i))?;
        let ratio = if rhs > 0.0 {
            lhs / rhs
        } else if lhs > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        worst = worst.max(ratio);
    }
    Ok(worst)
}

/// GBOSE behind the [`Policy`] contract.
#[derive(Debug, Clone)]
pub struct Gbose {
    config: GboseConfig,
    lambda: f64,
    gamma: f64,
    state: Option<EstimatorState>,
}

impl Gbose {
    pub fn new(config: GboseConfig) -> Result<Self> {
        config.validate()?;
        Ok(Gbose {
            config,
            lambda: f64::NAN,
            gamma: f64::NAN,
            state: None,
        })
    }

    pub fn config(&self) -> &GboseConfig {
        &self.config
    }

    /// Ridge used for `B_0`; available after `reset`.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Effective filter width (multiplier times the theoretical width).
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    fn state(&self) -> Result<&EstimatorState> {
        self.state
            .as_ref()
            .ok_or_else(|| Error::Internal("policy used before reset".into()))
    }
}

impl Policy for Gbose {
    fn name(&self) -> &str {
        "GBOSE"
    }

    fn reset(&mut self, dim: usize, horizon: usize) -> Result<()> {
        self.config.horizon = horizon;
        self.config.validate()?;
        let lambda = match self.config.ridge_override {
            Some(r) => r,
            None => theoretical_lambda(dim, horizon, self.config.delta)?,
        };
        self.lambda = lambda;
        self.gamma =
            self.config.gamma_multiplier * theoretical_gamma(dim, horizon, self.config.delta, lambda)?;
        self.state = Some(EstimatorState::new(dim, lambda)?);
        Ok(())
    }

    fn choose(&self, round: &RoundContext, rng: &mut SimRng) -> Result<Decision> {
        let state = self.state()?;
        let geom = PairGeometry::compute(state, round)?;
        let surviving = filter_actions(&geom, self.gamma);
        let (k, l) = select_pair(&geom, &surviving)?;
        let distribution = build_distribution(k, l, round.n_arms());
        let u: f64 = rng.random();
        let chosen = if u < distribution[k] { k } else { l };
        let centered_mean = round
            .arm(k)
            .iter()
            .zip(round.arm(l))
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        let mut diagnostics = Diagnostics::default();
        diagnostics.push("n_surviving", surviving.len() as f64);
        diagnostics.push("max_pair_distance", geom.distance(k, l));
        diagnostics.push("mu_hat_norm", norm2(state.mu_hat()));
        let decision = Decision {
            chosen,
            distribution,
            centered_mean,
            surviving,
            diagnostics,
        };
        #[cfg(debug_assertions)]
        {
            let ratio = distribution_constraint_ratio(state.psd(), round, &decision)?;
            debug_assert!(
                ratio <= 1.0 + CONSTRAINT_TOL,
                "distribution constraint violated: ratio {ratio}"
            );
        }
        Ok(decision)
    }

    fn update(&mut self, feedback: &Feedback<'_>) -> Result<()> {
        let state = self
            .state
            .as_mut()
            .ok_or_else(|| Error::Internal("policy used before reset".into()))?;
        check_len("round dimension", feedback.round.dim(), state.dim())?;
        check_len(
            "centered mean",
            feedback.decision.centered_mean.len(),
            state.dim(),
        )?;
        let x: Vec<f64> = feedback
            .chosen_context()
            .iter()
            .zip(&feedback.decision.centered_mean)
            .map(|(a, b)| a - b)
            .collect();
        state.observe(&x, feedback.reward)
    }

    fn estimator(&self) -> Option<&EstimatorState> {
        self.state.as_ref()
    }
}
