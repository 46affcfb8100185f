use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::episode::{derive_seed, run_episode};
use crate::error::{Error, Result};

/// Identifies one episode of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveMeta {
    pub policy: String,
    pub env_index: usize,
    pub env_label: String,
    pub setting: String,
    pub n_arms: usize,
    pub dim: usize,
    pub gamma_index: usize,
    pub gamma_mult: f64,
    pub rep: usize,
    pub seed: u64,
}

/// Cumulative regret `R(1..=T)` of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretCurve {
    pub meta: CurveMeta,
    pub values: Vec<f64>,
}

impl RegretCurve {
    pub fn final_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellFailure {
    #[serde(flatten)]
    pub meta: CurveMeta,
    pub error: String,
}

#[derive(Debug, Clone, Default)]
pub struct SweepResult {
    /// In canonical order: environment, policy, multiplier, replication.
    pub curves: Vec<RegretCurve>,
    pub failures: Vec<CellFailure>,
}

/// Seed shared by every policy at the same (environment, multiplier, replication).
pub fn cell_seed(master: u64, env_index: usize, gamma_index: usize, rep: usize) -> u64 {
    derive_seed(master, &[env_index as u64, gamma_index as u64, rep as u64])
}

/// Every cell of the sweep in canonical order.
pub fn enumerate_cells(config: &ExperimentConfig) -> Vec<CurveMeta> {
    let mut cells = Vec::with_capacity(config.n_cells());
    for (ei, env) in config.environments.iter().enumerate() {
        for policy in &config.policies {
            for (gi, g) in config.gamma_grid.iter().enumerate() {
                for rep in 0..config.n_reps {
                    cells.push(CurveMeta {
                        policy: policy.label(),
                        env_index: ei,
                        env_label: env.label(),
                        setting: env.setting.clone(),
                        n_arms: env.n_arms,
                        dim: env.dim,
                        gamma_index: gi,
                        gamma_mult: *g,
                        rep,
                        seed: cell_seed(config.master_seed, ei, gi, rep),
                    });
                }
            }
        }
    }
    cells
}

/// Runs one cell with the configured policy and environment.
pub fn run_cell(config: &ExperimentConfig, cell: &CurveMeta) -> Result<Vec<f64>> {
    let policy_spec = config
        .policies
        .iter()
        .find(|p| p.label() == cell.policy)
        .ok_or_else(|| Error::Internal(format!("unknown policy {}", cell.policy)))?;
    let env = &config.environments[cell.env_index];
    let mut policy = policy_spec.build(cell.gamma_mult, config.horizon)?;
    let spec = env.spec(cell.seed)?;
    Ok(run_episode(policy.as_mut(), &spec, config.horizon, cell.seed)?.cumulative_regret)
}

pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    run_sweep_with(config, run_cell)
}

/// Runs every cell through `runner` on `config.parallelism` workers. Output
/// order and content do not depend on the worker count; a failing cell is
/// recorded and the rest proceed.
pub fn run_sweep_with<F>(config: &ExperimentConfig, runner: F) -> Result<SweepResult>
where
    F: Fn(&ExperimentConfig, &CurveMeta) -> Result<Vec<f64>> + Sync,
{
    config.validate()?;
    let cells = enumerate_cells(config);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    let outcomes: Vec<Result<Vec<f64>>> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let out = runner(config, cell);
                log::debug!(
                    "cell {} {} gamma#{} rep {} done",
                    cell.env_label,
                    cell.policy,
                    cell.gamma_index,
                    cell.rep
                );
                out
            })
            .collect()
    });
    let mut result = SweepResult::default();
    for (meta, outcome) in cells.into_iter().zip(outcomes) {
        match outcome {
            Ok(values) => result.curves.push(RegretCurve { meta, values }),
            Err(e) => {
                log::error!(
                    "cell {} {} gamma#{} rep {} failed: {e}",
                    meta.env_label,
                    meta.policy,
                    meta.gamma_index,
                    meta.rep
                );
                result.failures.push(CellFailure {
                    meta,
                    error: e.to_string(),
                })
            }
        }
    }
    Ok(result)
}
