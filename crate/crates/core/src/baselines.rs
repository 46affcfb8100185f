//! Thompson-sampling comparison policies.
//!
//! * [`LinTs`]: linear Thompson sampling with the uncentered ridge
//!   estimator (Agrawal & Goyal, 2013).
//! * [`SemiTs`]: semiparametric Thompson sampling with a centered estimator
//!   and Monte-Carlo action probabilities (Kim & Paik, 2019).
//! * [`ActionCenteredTs`]: two-stage action-centered Thompson sampling with a
//!   clipped play probability against a base arm (Greenewald et al., 2017).
//!
//! All three sample `mu_tilde ~ N(mu_hat, scale^2 B^{-1})`, where `scale` is the
//! swept exploration hyperparameter.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::bandit::{argmax, Decision, Diagnostics, Feedback, Policy, RoundContext, SimRng};
use crate::error::{check_len, Error, Result};
use crate::gbose::EstimatorState;
use crate::linalg::{cholesky, dot, norm2, sample_with_factor};

pub const DEFAULT_MC_SAMPLES: usize = 1000;
pub const DEFAULT_CLIP: (f64, f64) = (0.1, 0.9);

#[derive(Debug, Clone, PartialEq)]
pub struct TsConfig {
    /// Posterior-width multiplier `v`.
    pub scale: f64,
    pub ridge: f64,
    /// Monte-Carlo draws for the action probabilities (semiparametric TS).
    pub mc_samples: usize,
    /// Bounds on the play probability (action-centered TS).
    pub clip: (f64, f64),
}

impl Default for TsConfig {
    fn default() -> Self {
        TsConfig {
            scale: 1.0,
            ridge: 1.0,
            mc_samples: DEFAULT_MC_SAMPLES,
            clip: DEFAULT_CLIP,
        }
    }
}

impl TsConfig {
    pub fn with_scale(scale: f64) -> Self {
        TsConfig {
            scale,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale >= 0.0 && self.scale.is_finite()) {
            return Err(Error::invalid(format!("scale must be nonnegative, got {}", self.scale)));
        }
        if !(self.ridge > 0.0 && self.ridge.is_finite()) {
            return Err(Error::invalid(format!("ridge must be positive, got {}", self.ridge)));
        }
        if self.mc_samples == 0 {
            return Err(Error::invalid("mc_samples must be positive"));
        }
        let (lo, hi) = self.clip;
        if !(lo > 0.0 && hi < 1.0 && lo <= hi) {
            return Err(Error::invalid(format!(
                "clip bounds must satisfy 0 < p_min <= p_max < 1, got ({lo}, {hi})"
            )));
        }
        Ok(())
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

fn state_ref(state: &Option<EstimatorState>) -> Result<&EstimatorState> {
    state
        .as_ref()
        .ok_or_else(|| Error::Internal("policy used before reset".into()))
}

fn state_mut(state: &mut Option<EstimatorState>) -> Result<&mut EstimatorState> {
    state
        .as_mut()
        .ok_or_else(|| Error::Internal("policy used before reset".into()))
}

/// Posterior draw `mu_hat + scale * chol(B^{-1}) z`; the mean itself when
/// `scale == 0`.
fn posterior_draw(state: &EstimatorState, scale: f64, rng: &mut SimRng) -> Result<Vec<f64>> {
    if scale == 0.0 {
        return Ok(state.mu_hat().to_vec());
    }
    let l = cholesky(state.psd().inv())?;
    Ok(sample_with_factor(state.mu_hat(), &l, scale, rng))
}

fn one_hot(i: usize, n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

fn centered(b: &[f64], mean: &[f64]) -> Vec<f64> {
    b.iter().zip(mean).map(|(a, m)| a - m).collect()
}

/// Linear Thompson sampling.
#[derive(Debug, Clone)]
pub struct LinTs {
    config: TsConfig,
    state: Option<EstimatorState>,
}

impl LinTs {
    pub fn new(config: TsConfig) -> Result<Self> {
        config.validate()?;
        Ok(LinTs { config, state: None })
    }
}

impl Policy for LinTs {
    fn name(&self) -> &str {
        "TS"
    }

    fn reset(&mut self, dim: usize, _horizon: usize) -> Result<()> {
        self.state = Some(EstimatorState::new(dim, self.config.ridge)?);
        Ok(())
    }

    fn choose(&self, round: &RoundContext, rng: &mut SimRng) -> Result<Decision> {
        let state = state_ref(&self.state)?;
        check_len("round dimension", round.dim(), state.dim())?;
        let sample = posterior_draw(state, self.config.scale, rng)?;
        let chosen = argmax(round.arms().map(|b| dot(b, &sample))).unwrap_or(0);
        let mut diagnostics = Diagnostics::default();
        diagnostics.push("sample_norm", norm2(&sample));
        Ok(Decision {
            chosen,
            distribution: one_hot(chosen, round.n_arms()),
            centered_mean: round.arm(chosen).to_vec(),
            surviving: (0..round.n_arms()).collect(),
            diagnostics,
        })
    }

    fn update(&mut self, feedback: &Feedback<'_>) -> Result<()> {
        let state = state_mut(&mut self.state)?;
        state.observe(feedback.chosen_context(), feedback.reward)
    }

    fn estimator(&self) -> Option<&EstimatorState> {
        self.state.as_ref()
    }
}

/// Semiparametric Thompson sampling.
#[derive(Debug, Clone)]
pub struct SemiTs {
    config: TsConfig,
    state: Option<EstimatorState>,
}

impl SemiTs {
    pub fn new(config: TsConfig) -> Result<Self> {
        config.validate()?;
        Ok(SemiTs { config, state: None })
    }

    /// Play probabilities estimated from `M` fresh posterior draws plus the
    /// realized one, so the played arm always has positive mass.
    fn action_probabilities(
        &self,
        state: &EstimatorState,
        round: &RoundContext,
        chosen: usize,
        rng: &mut SimRng,
    ) -> Result<Vec<f64>> {
        let n = round.n_arms();
        let d = round.dim();
        let m = self.config.mc_samples;
        let mut counts = vec![0usize; n];
        counts[chosen] += 1;
        if self.config.scale == 0.0 {
            counts[chosen] += m;
        } else {
            // score_i = <b_i, mu_hat> + scale * (L^T b_i) . z
            let l = cholesky(state.psd().inv())?;
            let means: Vec<f64> = round.arms().map(|b| dot(b, state.mu_hat())).collect();
            let mut loadings = vec![0.0; n * d];
            for (i, b) in round.arms().enumerate() {
                let row = &mut loadings[i * d..(i + 1) * d];
                for (k, out) in row.iter_mut().enumerate() {
                    // (L^T b)_k = sum_{r >= k} L[r][k] b_r
                    let mut s = 0.0;
                    for (r, br) in b.iter().enumerate().skip(k) {
                        s += l.get(r, k) * br;
                    }
                    *out = self.config.scale * s;
                }
            }
            let mut z = vec![0.0; d];
            for _ in 0..m {
                for zk in z.iter_mut() {
                    *zk = rng.sample(StandardNormal);
                }
                let mut best = 0;
                let mut best_val = f64::NEG_INFINITY;
                for i in 0..n {
                    let v = means[i] + dot(&loadings[i * d..(i + 1) * d], &z);
                    if v > best_val {
                        best = i;
                        best_val = v;
                    }
                }
                counts[best] += 1;
            }
        }
        let total = (m + 1) as f64;
        Ok(counts.iter().map(|c| *c as f64 / total).collect())
    }
}

impl Policy for SemiTs {
    fn name(&self) -> &str {
        "SemiTS"
    }

    fn reset(&mut self, dim: usize, _horizon: usize) -> Result<()> {
        self.state = Some(EstimatorState::new(dim, self.config.ridge)?);
        Ok(())
    }

    fn choose(&self, round: &RoundContext, rng: &mut SimRng) -> Result<Decision> {
        let state = state_ref(&self.state)?;
        check_len("round dimension", round.dim(), state.dim())?;
        let sample = posterior_draw(state, self.config.scale, rng)?;
        let chosen = argmax(round.arms().map(|b| dot(b, &sample))).unwrap_or(0);
        let distribution = self.action_probabilities(state, round, chosen, rng)?;
        let centered_mean = round.weighted_mean(&distribution);
        let surviving = (0..round.n_arms()).collect();
        let mut diagnostics = Diagnostics::default();
        diagnostics.push("sample_norm", norm2(&sample));
        Ok(Decision {
            chosen,
            distribution,
            centered_mean,
            surviving,
            diagnostics,
        })
    }

    fn update(&mut self, feedback: &Feedback<'_>) -> Result<()> {
        let state = state_mut(&mut self.state)?;
        let decision = feedback.decision;
        let round = feedback.round;
        check_len("round dimension", round.dim(), state.dim())?;
        check_len("arm distribution", decision.distribution.len(), round.n_arms())?;
        let x = centered(feedback.chosen_context(), &decision.centered_mean);
        state.add_design(&x)?;
        for (i, p) in decision.distribution.iter().enumerate() {
            if *p > 0.0 {
                let w = p.sqrt();
                let xi: Vec<f64> = centered(round.arm(i), &decision.centered_mean)
                    .into_iter()
                    .map(|v| w * v)
                    .collect();
                state.add_design(&xi)?;
            }
        }
        state.add_response(&x, 2.0 * feedback.reward)?;
        state.refresh_estimate();
        Ok(())
    }

    fn estimator(&self) -> Option<&EstimatorState> {
        self.state.as_ref()
    }
}

/// Action-centered Thompson sampling. Arm 0 is the base arm.
#[derive(Debug, Clone)]
pub struct ActionCenteredTs {
    config: TsConfig,
    state: Option<EstimatorState>,
}

impl ActionCenteredTs {
    pub const BASE_ARM: usize = 0;

    pub fn new(config: TsConfig) -> Result<Self> {
        config.validate()?;
        Ok(ActionCenteredTs { config, state: None })
    }

    /// `Phi(<b, mu_hat> / (scale * ||b||_{B^-1}))`, clipped.
    pub fn play_probability(&self, state: &EstimatorState, b: &[f64]) -> Result<f64> {
        let mean = dot(b, state.mu_hat());
        let q = state.psd().mahalanobis_sq(b)?;
        let raw = if self.config.scale > 0.0 && q > 0.0 {
            normal_cdf(mean / (self.config.scale * q.sqrt()))
        } else if mean > 0.0 {
            1.0
        } else {
            0.0
        };
        let (lo, hi) = self.config.clip;
        Ok(raw.clamp(lo, hi))
    }
}

impl Policy for ActionCenteredTs {
    fn name(&self) -> &str {
        "ActionTS"
    }

    fn reset(&mut self, dim: usize, _horizon: usize) -> Result<()> {
        self.state = Some(EstimatorState::new(dim, self.config.ridge)?);
        Ok(())
    }

    fn choose(&self, round: &RoundContext, rng: &mut SimRng) -> Result<Decision> {
        let state = state_ref(&self.state)?;
        check_len("round dimension", round.dim(), state.dim())?;
        let n = round.n_arms();
        if n < 2 {
            return Err(Error::invalid("action-centered TS needs a base arm and one other arm"));
        }
        let sample = posterior_draw(state, self.config.scale, rng)?;
        let candidate = 1 + argmax(round.arms().skip(1).map(|b| dot(b, &sample))).unwrap_or(0);
        let pi_play = self.play_probability(state, round.arm(candidate))?;
        let u: f64 = rng.random();
        let chosen = if u < pi_play { candidate } else { Self::BASE_ARM };
        let mut distribution = vec![0.0; n];
        distribution[candidate] = pi_play;
        distribution[Self::BASE_ARM] = 1.0 - pi_play;
        let centered_mean = round.weighted_mean(&distribution);
        let mut diagnostics = Diagnostics::default();
        diagnostics.push("sample_norm", norm2(&sample));
        diagnostics.push("pi_play", pi_play);
        diagnostics.push("candidate_arm", candidate as f64);
        Ok(Decision {
            chosen,
            distribution,
            centered_mean,
            surviving: vec![Self::BASE_ARM, candidate],
            diagnostics,
        })
    }

    fn update(&mut self, feedback: &Feedback<'_>) -> Result<()> {
        let state = state_mut(&mut self.state)?;
        let decision = feedback.decision;
        check_len("round dimension", feedback.round.dim(), state.dim())?;
        let pi = decision
            .diagnostics
            .get("pi_play")
            .ok_or_else(|| Error::Internal("decision lacks pi_play".into()))?;
        let candidate = decision
            .diagnostics
            .get("candidate_arm")
            .ok_or_else(|| Error::Internal("decision lacks candidate_arm".into()))?
            as usize;
        let b = feedback.round.arm(candidate);
        let w = (pi * (1.0 - pi)).sqrt();
        let scaled: Vec<f64> = b.iter().map(|v| w * v).collect();
        state.add_design(&scaled)?;
        let indicator = if decision.chosen == candidate { 1.0 } else { 0.0 };
        state.add_response(b, (indicator - pi) * feedback.reward)?;
        state.refresh_estimate();
        Ok(())
    }

    fn estimator(&self) -> Option<&EstimatorState> {
        self.state.as_ref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{spd_inverse, Matrix};
    use rand::SeedableRng;

    fn round(arms: &[&[f64]]) -> RoundContext {
        RoundContext::from_arms(1, &arms.iter().map(|a| a.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn ready<P: Policy>(mut p: P, dim: usize) -> P {
        p.reset(dim, 100).unwrap();
        p
    }

    fn teach(p: &mut dyn Policy, r: &RoundContext, chosen: usize, reward: f64) {
        let d = Decision {
            chosen,
            distribution: one_hot(chosen, r.n_arms()),
            centered_mean: r.arm(chosen).to_vec(),
            surviving: (0..r.n_arms()).collect(),
            diagnostics: Diagnostics::default(),
        };
        p.update(&Feedback { reward, round: r, decision: &d }).unwrap();
    }

    #[test]
    fn config_validation() {
        assert!(TsConfig { scale: -1.0, ..TsConfig::default() }.validate().is_err());
        assert!(TsConfig { ridge: 0.0, ..TsConfig::default() }.validate().is_err());
        assert!(TsConfig { mc_samples: 0, ..TsConfig::default() }.validate().is_err());
        assert!(TsConfig { clip: (0.6, 0.4), ..TsConfig::default() }.validate().is_err());
        assert!(TsConfig { clip: (0.0, 0.4), ..TsConfig::default() }.validate().is_err());
        TsConfig::default().validate().unwrap();
    }

    #[test]
    fn normal_cdf_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.96) - 0.975_002_104_851_780_1).abs() < 1e-12);
        assert!((normal_cdf(-1.0) - 0.158_655_253_931_457_05).abs() < 1e-12);
    }

    #[test]
    fn lints_zero_scale_is_greedy() {
        let mut p = ready(LinTs::new(TsConfig::with_scale(0.0)).unwrap(), 2);
        let r = round(&[&[1.0, 0.0], &[0.0, 1.0]]);
        teach(&mut p, &r, 1, 1.0);
        let mut rng = SimRng::seed_from_u64(0);
        for _ in 0..20 {
            let d = p.choose(&r, &mut rng).unwrap();
            assert_eq!(d.chosen, 1);
            d.validate(&r).unwrap();
        }
    }

    #[test]
    fn lints_symmetric_arms_split_evenly() {
        let p = ready(LinTs::new(TsConfig::with_scale(1.0)).unwrap(), 2);
        let r = round(&[&[1.0, 0.0], &[-1.0, 0.0]]);
        let mut rng = SimRng::seed_from_u64(17);
        let n = 10_000;
        let first = (0..n).filter(|_| p.choose(&r, &mut rng).unwrap().chosen == 0).count();
        let freq = first as f64 / n as f64;
        assert!((freq - 0.5).abs() <= 0.02, "{freq}");
    }

    #[test]
    fn lints_identical_contexts_pick_first() {
        let p = ready(LinTs::new(TsConfig::with_scale(1.0)).unwrap(), 2);
        let r = round(&[&[0.3, 0.3], &[0.3, 0.3], &[0.3, 0.3]]);
        let mut rng = SimRng::seed_from_u64(2);
        for _ in 0..50 {
            assert_eq!(p.choose(&r, &mut rng).unwrap().chosen, 0);
        }
    }

    #[test]
    fn lints_update_example() {
        let mut p = ready(LinTs::new(TsConfig::default()).unwrap(), 2);
        let r = round(&[&[1.0, 0.0], &[0.0, 1.0]]);
        teach(&mut p, &r, 0, 1.0);
        assert_eq!(p.estimator().unwrap().mu_hat(), &[0.5, 0.0]);
        // zero reward shrinks the estimate along the played direction
        teach(&mut p, &r, 0, 0.0);
        let mu = p.estimator().unwrap().mu_hat();
        assert!(mu[0] < 0.5 && mu[0] > 0.0);
    }

    #[test]
    fn lints_update_matches_batch_recompute() {
        let mut p = ready(LinTs::new(TsConfig::default()).unwrap(), 2);
        let r = round(&[&[0.6, 0.8], &[0.0, 1.0]]);
        teach(&mut p, &r, 0, 0.7);
        teach(&mut p, &r, 0, 0.7);
        // oracle: B = I + 2 b b^T, S = 2 * 0.7 b, recomputed directly
        let b = [0.6, 0.8];
        let mut rows = vec![vec![0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                rows[i][j] = if i == j { 1.0 } else { 0.0 } + 2.0 * b[i] * b[j];
            }
        }
        let inv = spd_inverse(&Matrix::from_rows(&rows).unwrap()).unwrap();
        let s = [1.4 * b[0], 1.4 * b[1]];
        let expected = inv.mul_vec(&s).unwrap();
        for (a, e) in p.estimator().unwrap().mu_hat().iter().zip(&expected) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn semits_zero_scale_is_one_hot() {
        let mut p = ready(SemiTs::new(TsConfig::with_scale(0.0)).unwrap(), 2);
        let r = round(&[&[1.0, 0.0], &[0.0, 1.0], &[0.5, 0.5]]);
        teach(&mut p, &r, 0, 2.0);
        let d = p.choose(&r, &mut SimRng::seed_from_u64(4)).unwrap();
        assert_eq!(d.chosen, 0);
        assert_eq!(d.distribution, vec![1.0, 0.0, 0.0]);
        assert_eq!(d.centered_mean, vec![1.0, 0.0]);
    }

    #[test]
    fn semits_symmetric_posterior() {
        let p = ready(SemiTs::new(TsConfig::with_scale(1.0)).unwrap(), 2);
        let r = round(&[&[1.0, 0.0], &[-1.0, 0.0]]);
        let mut rng = SimRng::seed_from_u64(8);
        for _ in 0..20 {
            let d = p.choose(&r, &mut rng).unwrap();
            d.validate(&r).unwrap();
            assert!((d.distribution[0] - 0.5).abs() <= 0.05, "{:?}", d.distribution);
            assert!((d.distribution.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            assert!(d.distribution[d.chosen] > 0.0);
        }
    }

    #[test]
    fn semits_probability_estimates_are_stable() {
        // fixed posterior, repeated estimates within 3 standard errors
        let mut p = ready(SemiTs::new(TsConfig::with_scale(1.0)).unwrap(), 2);
        let r = round(&[&[0.6, 0.0], &[0.0, 0.8], &[-0.5, 0.5]]);
        teach(&mut p, &r, 0, 0.5);
        teach(&mut p, &r, 1, -0.2);
        let mut rng = SimRng::seed_from_u64(12);
        let estimates: Vec<Vec<f64>> = (0..30).map(|_| p.choose(&r, &mut rng).unwrap().distribution).collect();
        for arm in 0..3 {
            let vals: Vec<f64> = estimates.iter().map(|e| e[arm]).collect();
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(hi - lo <= 2.0 * 0.05, "arm {arm}: spread {}", hi - lo);
        }
    }

    #[test]
    fn semits_update_example() {
        let mut p = ready(SemiTs::new(TsConfig::default()).unwrap(), 2);
        let r = round(&[&[1.0, 0.0], &[-1.0, 0.0]]);
        let d = Decision {
            chosen: 0,
            distribution: vec![0.5, 0.5],
            centered_mean: vec![0.0, 0.0],
            surviving: vec![0, 1],
            diagnostics: Diagnostics::default(),
        };
        p.update(&Feedback { reward: 1.0, round: &r, decision: &d }).unwrap();
        let s = p.estimator().unwrap();
        assert_eq!(s.psd().mat(), &Matrix::diag(&[3.0, 1.0]));
        assert_eq!(s.weighted_sum(), &[2.0, 0.0]);
        assert!((s.mu_hat()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.mu_hat()[1], 0.0);
    }

    #[test]
    fn semits_one_hot_update_leaves_response() {
        let mut p = ready(SemiTs::new(TsConfig::default()).unwrap(), 2);
        let r = round(&[&[1.0, 0.0], &[-1.0, 0.0]]);
        teach(&mut p, &r, 0, 5.0);
        let s = p.estimator().unwrap();
        assert_eq!(s.weighted_sum(), &[0.0, 0.0]);
        assert_eq!(s.psd().mat(), &Matrix::identity(2));
    }

    #[test]
    fn semits_identical_contexts_add_nothing() {
        let mut p = ready(SemiTs::new(TsConfig::default()).unwrap(), 2);
        let r = round(&[&[0.2, 0.4], &[0.2, 0.4], &[1.0, 0.0]]);
        let d = Decision {
            chosen: 0,
            distribution: vec![0.5, 0.5, 0.0],
            centered_mean: vec![0.2, 0.4],
            surviving: vec![0, 1, 2],
            diagnostics: Diagnostics::default(),
        };
        p.update(&Feedback { reward: 1.0, round: &r, decision: &d }).unwrap();
        assert_eq!(p.estimator().unwrap().psd().mat(), &Matrix::identity(2));
    }

    #[test]
    fn acts_untrained_plays_half_the_time() {
        let p = ready(ActionCenteredTs::new(TsConfig::default()).unwrap(), 2);
        let r = round(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        let mut rng = SimRng::seed_from_u64(21);
        let n = 10_000;
        let mut base = 0;
        for _ in 0..n {
            let d = p.choose(&r, &mut rng).unwrap();
            d.validate(&r).unwrap();
            assert_eq!(d.diagnostics.get("pi_play"), Some(0.5));
            if d.chosen == 0 {
                base += 1;
            }
        }
        let freq = base as f64 / n as f64;
        assert!((freq - 0.5).abs() <= 0.02, "{freq}");
    }

    #[test]
    fn acts_clip_binds() {
        let mut p = ready(ActionCenteredTs::new(TsConfig::default()).unwrap(), 2);
        let r = round(&[&[0.0, 0.0], &[1.0, 0.0]]);
        let state = EstimatorState::new(2, 1.0).unwrap();
        let mut s = state;
        s.add_response(&[1.0, 0.0], 1e6).unwrap();
        s.refresh_estimate();
        p.state = Some(s);
        let d = p.choose(&r, &mut SimRng::seed_from_u64(0)).unwrap();
        assert_eq!(d.diagnostics.get("pi_play"), Some(0.9));
        assert!((d.distribution.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(d.distribution, vec![1.0 - 0.9, 0.9]);
    }

    fn acts_decision(chosen: usize, pi: f64) -> Decision {
        let mut diagnostics = Diagnostics::default();
        diagnostics.push("pi_play", pi);
        diagnostics.push("candidate_arm", 1.0);
        Decision {
            chosen,
            distribution: vec![1.0 - pi, pi],
            centered_mean: vec![pi, 0.0],
            surviving: vec![0, 1],
            diagnostics,
        }
    }

    #[test]
    fn acts_update_example() {
        let mut p = ready(ActionCenteredTs::new(TsConfig::default()).unwrap(), 2);
        let r = round(&[&[0.0, 0.0], &[1.0, 0.0]]);
        let d = acts_decision(1, 0.5);
        p.update(&Feedback { reward: 1.0, round: &r, decision: &d }).unwrap();
        let s = p.estimator().unwrap();
        assert_eq!(s.psd().mat(), &Matrix::diag(&[1.25, 1.0]));
        assert_eq!(s.weighted_sum(), &[0.5, 0.0]);
        assert!((s.mu_hat()[0] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn acts_base_play_moves_against_candidate() {
        let mut p = ready(ActionCenteredTs::new(TsConfig::default()).unwrap(), 2);
        let r = round(&[&[0.0, 0.0], &[1.0, 0.0]]);
        p.update(&Feedback { reward: 1.0, round: &r, decision: &acts_decision(0, 0.3) }).unwrap();
        assert!(p.estimator().unwrap().weighted_sum()[0] < 0.0);
        let mut q = ready(ActionCenteredTs::new(TsConfig::default()).unwrap(), 2);
        q.update(&Feedback { reward: 0.0, round: &r, decision: &acts_decision(1, 0.3) }).unwrap();
        assert_eq!(q.estimator().unwrap().weighted_sum(), &[0.0, 0.0]);
    }

    #[test]
    fn lints_converges_on_fixed_instance() {
        // two fixed arms, no confounder, tiny exploration
        let mu = [0.4, -0.1];
        let r = round(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let mut p = ready(LinTs::new(TsConfig::with_scale(0.05)).unwrap(), 2);
        let mut rng = SimRng::seed_from_u64(5);
        let mut late_regret = 0.0;
        for t in 0..2000 {
            let d = p.choose(&r, &mut rng).unwrap();
            let reward = dot(&mu, r.arm(d.chosen)) + 0.1 * rng.sample::<f64, _>(StandardNormal);
            if t >= 1000 {
                late_regret += crate::bandit::instant_regret(&mu, &r, d.chosen).unwrap();
            }
            p.update(&Feedback { reward, round: &r, decision: &d }).unwrap();
        }
        assert!(late_regret / 1000.0 < 0.01, "{late_regret}");
    }
}
