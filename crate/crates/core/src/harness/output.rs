//! CSV and JSON result files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::aggregate::{AggregateBand, BandMeta};
use super::config::ExperimentConfig;
use super::sweep::{CellFailure, CurveMeta, RegretCurve};
use crate::error::{Error, Result};

pub const RAW_FILE: &str = "raw.csv";
pub const AGG_FILE: &str = "agg.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const RUN_FILE: &str = "run.json";
pub const FAILURES_FILE: &str = "failures.json";

pub const RAW_HEADER: [&str; 9] = [
    "policy", "setting", "n_arms", "dim", "gamma_mult", "rep", "seed", "t", "cum_regret",
];
pub const AGG_HEADER: [&str; 7] = ["policy", "setting", "gamma_mult", "t", "median", "q1", "q3"];
pub const SUMMARY_HEADER: [&str; 6] =
    ["policy", "n_arms", "dim", "setting", "best_gamma", "median_RT"];

/// Shortest decimal text that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// Creates `dir` if needed and confirms a file can be written there.
pub fn ensure_writable(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let probe = dir.join(".write-probe");
    fs::File::create(&probe)?.write_all(b"ok")?;
    fs::remove_file(&probe)?;
    Ok(())
}

fn keep_step(t: usize, last: usize, every: usize) -> bool {
    t == 1 || t == last || t.is_multiple_of(every)
}

pub fn write_raw(path: &Path, curves: &[RegretCurve], record_every: usize) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(RAW_HEADER)?;
    for c in curves {
        let m = &c.meta;
        let fixed = [
            m.policy.clone(),
            m.setting.clone(),
            m.n_arms.to_string(),
            m.dim.to_string(),
            fmt_f64(m.gamma_mult),
            m.rep.to_string(),
            m.seed.to_string(),
        ];
        let last = c.values.len();
        for (i, v) in c.values.iter().enumerate() {
            let t = i + 1;
            if !keep_step(t, last, record_every) {
                continue;
            }
            let mut rec: Vec<String> = fixed.to_vec();
            rec.push(t.to_string());
            rec.push(fmt_f64(*v));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One `agg.csv` row per band step; `setting` holds the environment label.
pub fn write_agg(path: &Path, bands: &[AggregateBand]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(AGG_HEADER)?;
    for b in bands {
        for i in 0..b.times.len() {
            w.write_record([
                b.meta.policy.clone(),
                b.meta.env_label.clone(),
                fmt_f64(b.meta.gamma_mult),
                b.times[i].to_string(),
                fmt_f64(b.median[i]),
                fmt_f64(b.q1[i]),
                fmt_f64(b.q3[i]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct AggRow {
    policy: String,
    setting: String,
    gamma_mult: f64,
    t: usize,
    median: f64,
    q1: f64,
    q3: f64,
}

/// Reads bands back from `agg.csv`, in file order.
pub fn read_agg(path: &Path) -> Result<Vec<AggregateBand>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != AGG_HEADER {
        return Err(Error::Parse(format!(
            "{}: unexpected header {}",
            path.display(),
            header.join(",")
        )));
    }
    let mut bands: Vec<AggregateBand> = Vec::new();
    for row in r.deserialize() {
        let row: AggRow = row?;
        let meta = BandMeta {
            policy: row.policy,
            env_label: row.setting,
            gamma_mult: row.gamma_mult,
        };
        let band = match bands.last_mut() {
            Some(b) if b.meta == meta => b,
            _ => {
                bands.push(AggregateBand {
                    meta,
                    times: Vec::new(),
                    median: Vec::new(),
                    q1: Vec::new(),
                    q3: Vec::new(),
                });
                bands.last_mut().expect("just pushed")
            }
        };
        band.times.push(row.t);
        band.median.push(row.median);
        band.q1.push(row.q1);
        band.q3.push(row.q3);
    }
    Ok(bands)
}

/// One line of `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub policy: String,
    pub n_arms: usize,
    pub dim: usize,
    pub setting: String,
    pub best_gamma: f64,
    #[serde(rename = "median_RT")]
    pub median_rt: f64,
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SUMMARY_HEADER)?;
    for s in rows {
        w.write_record([
            s.policy.clone(),
            s.n_arms.to_string(),
            s.dim.to_string(),
            s.setting.clone(),
            fmt_f64(s.best_gamma),
            fmt_f64(s.median_rt),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

#[derive(Debug, Serialize)]
struct CellSeed<'a> {
    policy: &'a str,
    env: &'a str,
    gamma_index: usize,
    rep: usize,
    seed: u64,
}

#[derive(Debug, Serialize)]
struct RunMetadata<'a> {
    version: &'a str,
    config: &'a ExperimentConfig,
    n_curves: usize,
    n_failures: usize,
    seeds: Vec<CellSeed<'a>>,
}

pub fn write_run_json(
    path: &Path,
    config: &ExperimentConfig,
    cells: &[CurveMeta],
    n_failures: usize,
) -> Result<()> {
    let meta = RunMetadata {
        version: env!("CARGO_PKG_VERSION"),
        config,
        n_curves: cells.len() - n_failures,
        n_failures,
        seeds: cells
            .iter()
            .map(|c| CellSeed {
                policy: &c.policy,
                env: &c.env_label,
                gamma_index: c.gamma_index,
                rep: c.rep,
                seed: c.seed,
            })
            .collect(),
    };
    let text = serde_json::to_string_pretty(&meta)
        .map_err(|e| Error::Internal(format!("run metadata: {e}")))?;
    fs::write(path, text)?;
    Ok(())
}

pub fn write_failures(path: &Path, failures: &[CellFailure]) -> Result<()> {
    let text = serde_json::to_string_pretty(failures)
        .map_err(|e| Error::Internal(format!("failures manifest: {e}")))?;
    fs::write(path, text)?;
    Ok(())
}

/// Paths of the files a run writes under `dir`.
pub fn output_paths(dir: &Path) -> [PathBuf; 4] {
    [
        dir.join(RAW_FILE),
        dir.join(AGG_FILE),
        dir.join(SUMMARY_FILE),
        dir.join(RUN_FILE),
    ]
}
