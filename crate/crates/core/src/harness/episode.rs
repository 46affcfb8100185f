use rand::SeedableRng;

use crate::bandit::{optimal_arm, Decision, Feedback, Policy, RoundContext, SimRng};
use crate::envs::{AssumptionViolation, Environment, EnvironmentSpec};
use crate::error::{Error, Result};

/// Stream tag separating the policy's generator from the environment's.
const POLICY_STREAM: u64 = 0x5eed_0f90_11c7;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent seed from a master seed and a path of indices.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix64(master), |acc, p| mix64(acc ^ mix64(*p)))
}

/// What one step looked like, handed to observers before the policy learns
/// from it (so the policy's estimator still reflects the previous step).
pub struct StepView<'a> {
    pub round: &'a RoundContext,
    pub decision: &'a Decision,
    pub reward: f64,
    pub regret: f64,
    pub optimal: usize,
    pub mu: &'a [f64],
    pub policy: &'a dyn Policy,
}

#[derive(Debug, Clone)]
pub struct EpisodeResult {
    /// Cumulative regret after steps `1..=T`.
    pub cumulative_regret: Vec<f64>,
    pub mu: Vec<f64>,
    pub warnings: Vec<(AssumptionViolation, usize)>,
}

/// Runs `policy` against the environment for `horizon` steps. The
/// environment is seeded with `seed`, the policy's generator with a value
/// derived from it.
pub fn run_episode(
    policy: &mut dyn Policy,
    env_spec: &EnvironmentSpec,
    horizon: usize,
    seed: u64,
) -> Result<EpisodeResult> {
    run_episode_observed(policy, env_spec, horizon, seed, |_| Ok(()))
}

pub fn run_episode_observed<F>(
    policy: &mut dyn Policy,
    env_spec: &EnvironmentSpec,
    horizon: usize,
    seed: u64,
    mut observe: F,
) -> Result<EpisodeResult>
where
    F: FnMut(&StepView<'_>) -> Result<()>,
{
    if horizon == 0 {
        return Err(Error::config("horizon must be at least 1"));
    }
    let spec = env_spec.clone().with_seed(seed);
    let mut env = Environment::new(spec)?;
    policy
        .reset(env_spec.dim, horizon)
        .map_err(|e| Error::Config(format!("policy {}: {e}", policy.name())))?;
    if let Some(est) = policy.estimator() {
        if est.dim() != env_spec.dim {
            return Err(Error::config(format!(
                "policy dimension {} does not match environment dimension {}",
                est.dim(),
                env_spec.dim
            )));
        }
    }
    let mut rng = SimRng::seed_from_u64(derive_seed(seed, &[POLICY_STREAM]));
    let mut curve = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let round = env.gen_contexts()?;
        let decision = policy.choose(&round, &mut rng)?;
        let reward = env.realize_reward(&round, decision.chosen)?;
        curve.push(env.cumulative_regret());
        observe(&StepView {
            round: &round,
            decision: &decision,
            reward,
            regret: env.last_regret(),
            optimal: optimal_arm(env.mu(), &round)?,
            mu: env.mu(),
            policy: &*policy,
        })?;
        policy.update(&Feedback {
            reward,
            round: &round,
            decision: &decision,
        })?;
    }
    Ok(EpisodeResult {
        cumulative_regret: curve,
        mu: env.mu().to_vec(),
        warnings: env.monitor().warnings().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandit::Diagnostics;
    use crate::envs::{Confounder, ContextMode};
    use crate::gbose::{Gbose, GboseConfig};

    /// Plays the best arm using knowledge of `mu`.
    struct Oracle {
        mu: Vec<f64>,
    }

    impl Policy for Oracle {
        fn name(&self) -> &str {
            "oracle"
        }
        fn reset(&mut self, _dim: usize, _horizon: usize) -> Result<()> {
            Ok(())
        }
        fn choose(&self, round: &RoundContext, _rng: &mut SimRng) -> Result<Decision> {
            let best = optimal_arm(&self.mu, round)?;
            let mut distribution = vec![0.0; round.n_arms()];
            distribution[best] = 1.0;
            Ok(Decision {
                chosen: best,
                distribution,
                centered_mean: round.arm(best).to_vec(),
                surviving: (0..round.n_arms()).collect(),
                diagnostics: Diagnostics::default(),
            })
        }
        fn update(&mut self, _feedback: &Feedback<'_>) -> Result<()> {
            Ok(())
        }
    }

    fn gbose() -> Gbose {
        Gbose::new(GboseConfig::new(50, 0.05, 0.1).unwrap()).unwrap()
    }

    #[test]
    fn seeds_are_distinct_and_stable() {
        let a = derive_seed(1, &[0, 0, 0]);
        assert_eq!(a, derive_seed(1, &[0, 0, 0]));
        assert_ne!(a, derive_seed(1, &[0, 0, 1]));
        assert_ne!(a, derive_seed(1, &[1, 0, 0]));
        assert_ne!(a, derive_seed(2, &[0, 0, 0]));
        assert_ne!(derive_seed(1, &[0, 1]), derive_seed(1, &[1, 0]));
    }

    #[test]
    fn horizon_one() {
        let spec = EnvironmentSpec::new(2, 4, Confounder::I, ContextMode::Block).unwrap();
        let out = run_episode(&mut gbose(), &spec, 1, 3).unwrap();
        assert_eq!(out.cumulative_regret.len(), 1);
        assert!(out.cumulative_regret[0] >= 0.0);
    }

    #[test]
    fn same_seed_same_curve() {
        let spec = EnvironmentSpec::new(4, 3, Confounder::II, ContextMode::Block).unwrap();
        let a = run_episode(&mut gbose(), &spec, 200, 77).unwrap();
        let b = run_episode(&mut gbose(), &spec, 200, 77).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.cumulative_regret), bits(&b.cumulative_regret));
        let c = run_episode(&mut gbose(), &spec, 200, 78).unwrap();
        assert_ne!(bits(&a.cumulative_regret), bits(&c.cumulative_regret));
    }

    #[test]
    fn oracle_has_zero_regret() {
        let spec = EnvironmentSpec::new(5, 4, Confounder::III, ContextMode::Sphere).unwrap();
        let seed = 12;
        let mu = Environment::new(spec.clone().with_seed(seed)).unwrap().mu().to_vec();
        let out = run_episode(&mut Oracle { mu }, &spec, 300, seed).unwrap();
        assert!(out.cumulative_regret.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn dimension_mismatch_is_a_config_error() {
        struct FixedDim(crate::gbose::EstimatorState);
        impl Policy for FixedDim {
            fn name(&self) -> &str {
                "fixed"
            }
            fn reset(&mut self, _dim: usize, _horizon: usize) -> Result<()> {
                Ok(())
            }
            fn choose(&self, _round: &RoundContext, _rng: &mut SimRng) -> Result<Decision> {
                unreachable!("must fail before the first step")
            }
            fn update(&mut self, _feedback: &Feedback<'_>) -> Result<()> {
                Ok(())
            }
            fn estimator(&self) -> Option<&crate::gbose::EstimatorState> {
                Some(&self.0)
            }
        }
        let spec = EnvironmentSpec::new(2, 4, Confounder::I, ContextMode::Block).unwrap();
        let mut p = FixedDim(crate::gbose::EstimatorState::new(3, 1.0).unwrap());
        assert!(matches!(run_episode(&mut p, &spec, 10, 0), Err(Error::Config(_))));
    }

    #[test]
    fn curve_is_nondecreasing() {
        let spec = EnvironmentSpec::new(10, 2, Confounder::II, ContextMode::Sphere).unwrap();
        let out = run_episode(&mut gbose(), &spec, 500, 5).unwrap();
        assert!(out.cumulative_regret.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(
            out.warnings
                .iter()
                .filter(|(k, _)| *k == AssumptionViolation::ConfounderBound)
                .count(),
            1
        );
    }
}
