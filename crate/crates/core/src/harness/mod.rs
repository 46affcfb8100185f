//! Sweeps, aggregation, result files, figures and the command line.

pub mod aggregate;
pub mod cli;
pub mod config;
pub mod episode;
pub mod output;
pub mod plot;
pub mod sweep;

use std::path::{Path, PathBuf};

pub use aggregate::{aggregate_band, select_best_gamma, AggregateBand, BandMeta};
pub use config::{EnvSetup, ExperimentConfig, PolicySpec};
pub use episode::{derive_seed, run_episode, run_episode_observed, EpisodeResult, StepView};
pub use output::SummaryRow;
pub use sweep::{run_sweep, run_sweep_with, CellFailure, CurveMeta, RegretCurve, SweepResult};

use crate::error::Result;

/// Everything a finished run produced.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub curves: Vec<RegretCurve>,
    pub failures: Vec<CellFailure>,
    /// Thinned bands for every complete (environment, policy, multiplier).
    pub bands: Vec<AggregateBand>,
    /// Best-multiplier band per (environment, policy), thinned.
    pub best: Vec<AggregateBand>,
    pub summary: Vec<SummaryRow>,
    pub figures: Vec<PathBuf>,
}

/// Per (environment, policy), the band with the smallest final median,
/// earliest on ties. Input order is preserved.
pub fn best_bands(bands: &[AggregateBand]) -> Vec<AggregateBand> {
    let mut best: Vec<AggregateBand> = Vec::new();
    for b in bands {
        match best
            .iter_mut()
            .find(|x| x.meta.policy == b.meta.policy && x.meta.env_label == b.meta.env_label)
        {
            Some(x) => {
                if b.final_median() < x.final_median() {
                    *x = b.clone();
                }
            }
            None => best.push(b.clone()),
        }
    }
    best
}

/// Runs the whole sweep and writes every output file into `out_dir`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<RunReport> {
    run_experiment_with(config, out_dir, sweep::run_cell)
}

pub fn run_experiment_with<F>(config: &ExperimentConfig, out_dir: &Path, runner: F) -> Result<RunReport>
where
    F: Fn(&ExperimentConfig, &CurveMeta) -> Result<Vec<f64>> + Sync,
{
    config.validate()?;
    output::ensure_writable(out_dir)?;
    log::info!(
        "running {} episodes of {} steps into {}",
        config.n_cells(),
        config.horizon,
        out_dir.display()
    );
    let result = run_sweep_with(config, runner)?;

    let mut bands = Vec::new();
    let mut best = Vec::new();
    let mut summary = Vec::new();
    for env in &config.environments {
        let env_label = env.label();
        for policy in &config.policies {
            let label = policy.label();
            for gi in 0..config.gamma_grid.len() {
                let group: Vec<&RegretCurve> = result
                    .curves
                    .iter()
                    .filter(|c| {
                        c.meta.policy == label && c.meta.env_label == env_label && c.meta.gamma_index == gi
                    })
                    .collect();
                if group.len() == config.n_reps {
                    bands.push(aggregate_band(&group)?.thinned(config.record_every));
                }
            }
            match select_best_gamma(&result.curves, &label, &env_label, config.n_reps) {
                Ok((_, band)) => {
                    summary.push(SummaryRow {
                        policy: label.clone(),
                        n_arms: env.n_arms,
                        dim: env.dim,
                        setting: env.setting.clone(),
                        best_gamma: band.meta.gamma_mult,
                        median_rt: band.final_median(),
                    });
                    best.push(band.thinned(config.record_every));
                }
                Err(e) => log::warn!("{e}"),
            }
        }
    }

    let cells = sweep::enumerate_cells(config);
    output::write_raw(&out_dir.join(output::RAW_FILE), &result.curves, config.record_every)?;
    output::write_agg(&out_dir.join(output::AGG_FILE), &bands)?;
    output::write_summary(&out_dir.join(output::SUMMARY_FILE), &summary)?;
    output::write_run_json(&out_dir.join(output::RUN_FILE), config, &cells, result.failures.len())?;
    output::write_failures(&out_dir.join(output::FAILURES_FILE), &result.failures)?;
    let figures = if best.is_empty() {
        Vec::new()
    } else {
        plot::render_figures(&best_bands(&bands), out_dir)?
    };

    Ok(RunReport {
        out_dir: out_dir.to_path_buf(),
        curves: result.curves,
        failures: result.failures,
        bands,
        best,
        summary,
        figures,
    })
}
