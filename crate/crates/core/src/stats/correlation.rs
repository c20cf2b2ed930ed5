//! Segment- and system-level correlation statistics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::StatsError;

fn check_pair(x: &[f64], y: &[f64]) -> Result<(), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(StatsError::TooFew { needed: 2, got: x.len() });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(())
}

/// 1-based ranks with ties sharing their mean rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let mean_rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = mean_rank;
        }
        i = j + 1;
    }
    ranks
}

pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    check_pair(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::Undefined("a variable is constant"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Pearson correlation of average ranks.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    check_pair(x, y)?;
    pearson_r(&average_ranks(x), &average_ranks(y))
}

/// Kendall's tau-b.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    check_pair(x, y)?;
    let n = x.len();
    let (mut concordant, mut discordant, mut tied_x, mut tied_y) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[i].partial_cmp(&x[j]).unwrap();
            let dy = y[i].partial_cmp(&y[j]).unwrap();
            use std::cmp::Ordering::Equal;
            if dx == Equal {
                tied_x += 1;
            }
            if dy == Equal {
                tied_y += 1;
            }
            if dx != Equal && dy != Equal {
                if dx == dy {
                    concordant += 1;
                } else {
                    discordant += 1;
                }
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as i64;
    let denom = ((n0 - tied_x) as f64) * ((n0 - tied_y) as f64);
    if denom == 0.0 {
        return Err(StatsError::AllTied);
    }
    Ok((concordant - discordant) as f64 / denom.sqrt())
}

/// Fraction of `(better, worse)` index pairs ordered correctly by `scores`;
/// ties count one half.
pub fn pairwise_accuracy(scores: &[f64], labels: &[(usize, usize)]) -> Result<f64, StatsError> {
    if labels.is_empty() {
        return Err(StatsError::TooFew { needed: 1, got: 0 });
    }
    let mut hits = 0.0;
    for &(better, worse) in labels {
        let (b, w) = match (scores.get(better), scores.get(worse)) {
            (Some(b), Some(w)) => (*b, *w),
            _ => return Err(StatsError::IndexOutOfRange(better.max(worse))),
        };
        if b > w {
            hits += 1.0;
        } else if b == w {
            hits += 0.5;
        }
    }
    Ok(hits / labels.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemAggregate {
    pub system: String,
    pub metric: f64,
    pub human: f64,
    pub records: usize,
}

/// Per-system means of `(system, metric, human)` records, ordered by
/// system id.
pub fn system_level_aggregate<S: AsRef<str>>(records: &[(S, f64, f64)]) -> Vec<SystemAggregate> {
    let mut groups: BTreeMap<&str, (f64, f64, usize)> = BTreeMap::new();
    for (sys, m, h) in records {
        let e = groups.entry(sys.as_ref()).or_default();
        e.0 += m;
        e.1 += h;
        e.2 += 1;
    }
    groups
        .into_iter()
        .map(|(system, (m, h, n))| SystemAggregate {
            system: system.to_string(),
            metric: m / n as f64,
            human: h / n as f64,
            records: n,
        })
        .collect()
}
