//! Percentile bootstrap confidence intervals for correlation statistics.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Statistic, StatsError};
use crate::rng::derived_rng;

/// Attempts per requested resample before the interval is flagged.
const ATTEMPT_CAP: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCi {
    pub low: f64,
    pub high: f64,
    pub resamples_used: usize,
    pub resamples_skipped: usize,
    /// Set when the attempt cap ran out before enough usable resamples
    /// were drawn.
    pub incomplete: bool,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// One resample, or `None` if the statistic is undefined on it. A resample
/// needs at least two distinct human scores.
fn resample(pairs: &[(f64, f64)], statistic: Statistic, seed: u64, attempt: usize) -> Option<f64> {
    let mut rng = derived_rng(seed, attempt as u64);
    let n = pairs.len();
    let (mut xs, mut ys) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let (x, y) = pairs[rng.random_range(0..n)];
        xs.push(x);
        ys.push(y);
    }
    if ys.iter().all(|&y| y == ys[0]) {
        return None;
    }
    statistic.compute(&xs, &ys).ok()
}

/// Percentile interval of `statistic` over `(metric, human)` pairs
/// resampled with replacement.
pub fn bootstrap_ci(
    pairs: &[(f64, f64)],
    statistic: Statistic,
    resamples: usize,
    level: f64,
    seed: u64,
) -> Result<BootstrapCi, StatsError> {
    if pairs.len() < 2 {
        return Err(StatsError::TooFew { needed: 2, got: pairs.len() });
    }
    if resamples == 0 || !(level > 0.0 && level < 1.0) {
        return Err(StatsError::DegenerateInput("need resamples >= 1 and level in (0, 1)"));
    }
    let cap = resamples * ATTEMPT_CAP;
    let mut values = Vec::with_capacity(resamples);
    let mut attempted = 0;
    while values.len() < resamples && attempted < cap {
        let batch = (resamples - values.len()).min(cap - attempted);
        let drawn: Vec<Option<f64>> =
            (attempted..attempted + batch).into_par_iter().map(|a| resample(pairs, statistic, seed, a)).collect();
        attempted += batch;
        values.extend(drawn.into_iter().flatten());
    }
    values.truncate(resamples);
    if values.is_empty() {
        return Err(StatsError::Undefined("no resample had a defined statistic"));
    }
    let used = values.len();
    values.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok(BootstrapCi {
        low: quantile(&values, tail),
        high: quantile(&values, 1.0 - tail),
        resamples_used: used,
        resamples_skipped: attempted - used,
        incomplete: used < resamples,
    })
}
