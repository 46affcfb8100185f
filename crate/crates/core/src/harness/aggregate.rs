use serde::Serialize;

use super::sweep::RegretCurve;
use crate::error::{Error, Result};

/// The `p`-quantile of sorted data, interpolating linearly at rank `p (n - 1)`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let rank = p * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    if hi == lo {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandMeta {
    pub policy: String,
    pub env_label: String,
    pub gamma_mult: f64,
}

/// Pointwise median and quartiles of cumulative regret at the given steps.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateBand {
    pub meta: BandMeta,
    /// 1-based time steps.
    pub times: Vec<usize>,
    pub median: Vec<f64>,
    pub q1: Vec<f64>,
    pub q3: Vec<f64>,
}

impl AggregateBand {
    pub fn final_median(&self) -> f64 {
        self.median.last().copied().unwrap_or(0.0)
    }

    /// Keeps steps with `t == 1`, `t == T`, or `t % every == 0`.
    pub fn thinned(&self, every: usize) -> AggregateBand {
        let last = self.times.last().copied().unwrap_or(0);
        let keep: Vec<usize> = self
            .times
            .iter()
            .enumerate()
            .filter(|(_, t)| **t == 1 || **t == last || t.is_multiple_of(every))
            .map(|(i, _)| i)
            .collect();
        let pick = |v: &[f64]| keep.iter().map(|&i| v[i]).collect::<Vec<_>>();
        AggregateBand {
            meta: self.meta.clone(),
            times: keep.iter().map(|&i| self.times[i]).collect(),
            median: pick(&self.median),
            q1: pick(&self.q1),
            q3: pick(&self.q3),
        }
    }
}

/// Pointwise bands across replications of one cell. Curves must share a length.
pub fn aggregate_band(curves: &[&RegretCurve]) -> Result<AggregateBand> {
    let first = curves
        .first()
        .ok_or_else(|| Error::invalid("cannot aggregate zero curves"))?;
    let len = first.values.len();
    if curves.iter().any(|c| c.values.len() != len) {
        return Err(Error::invalid("curves differ in length"));
    }
    let mut median = Vec::with_capacity(len);
    let mut q1 = Vec::with_capacity(len);
    let mut q3 = Vec::with_capacity(len);
    let mut column = vec![0.0; curves.len()];
    for t in 0..len {
        for (slot, c) in column.iter_mut().zip(curves) {
            *slot = c.values[t];
        }
        column.sort_by(f64::total_cmp);
        q1.push(quantile_sorted(&column, 0.25));
        median.push(quantile_sorted(&column, 0.5));
        q3.push(quantile_sorted(&column, 0.75));
    }
    Ok(AggregateBand {
        meta: BandMeta {
            policy: first.meta.policy.clone(),
            env_label: first.meta.env_label.clone(),
            gamma_mult: first.meta.gamma_mult,
        },
        times: (1..=len).collect(),
        median,
        q1,
        q3,
    })
}

/// Picks the multiplier with the smallest median final regret for one
/// (policy, environment), lowest index on ties. Multipliers with fewer than
/// `n_reps` curves are skipped with a warning.
pub fn select_best_gamma(
    curves: &[RegretCurve],
    policy: &str,
    env_label: &str,
    n_reps: usize,
) -> Result<(usize, AggregateBand)> {
    let mut by_gamma: Vec<(usize, Vec<&RegretCurve>)> = Vec::new();
    for c in curves
        .iter()
        .filter(|c| c.meta.policy == policy && c.meta.env_label == env_label)
    {
        match by_gamma.iter_mut().find(|(g, _)| *g == c.meta.gamma_index) {
            Some((_, v)) => v.push(c),
            None => by_gamma.push((c.meta.gamma_index, vec![c])),
        }
    }
    by_gamma.sort_by_key(|(g, _)| *g);
    let mut best: Option<(usize, f64, &[&RegretCurve])> = None;
    for (g, group) in &by_gamma {
        if group.len() < n_reps {
            log::warn!(
                "{policy} on {env_label}: multiplier #{g} has {} of {n_reps} replications; skipped",
                group.len()
            );
            continue;
        }
        let finals: Vec<f64> = group.iter().map(|c| c.final_value()).collect();
        let m = median(&finals);
        if best.is_none_or(|(_, bm, _)| m < bm) {
            best = Some((*g, m, group));
        }
    }
    let (g, _, group) = best.ok_or_else(|| {
        Error::invalid(format!("no complete multiplier for {policy} on {env_label}"))
    })?;
    Ok((g, aggregate_band(group)?))
}
