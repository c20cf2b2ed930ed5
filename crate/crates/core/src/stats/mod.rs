//! Meta-evaluation statistics: correlations, significance tests and
//! bootstrap intervals.

use serde::{Deserialize, Serialize};
use thiserror::Error;

mod bootstrap;
mod correlation;
mod significance;
pub mod special;

pub use bootstrap::{bootstrap_ci, BootstrapCi};
pub use correlation::{
    average_ranks, kendall_tau, pairwise_accuracy, pearson_r, spearman_rho, system_level_aggregate, SystemAggregate,
};
pub use significance::{mann_whitney_u, williams_test, MannWhitney, WilliamsResult, MANN_WHITNEY_EXACT_MAX};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("inputs have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} observations, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("inputs contain non-finite values")]
    NonFinite,
    #[error("every pair is tied; tau-b is undefined")]
    AllTied,
    #[error("statistic undefined: {0}")]
    Undefined(&'static str),
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
    #[error("label refers to missing index {0}")]
    IndexOutOfRange(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    KendallTauB,
    SpearmanRho,
    PearsonR,
    PairwiseAccuracy,
}

impl Statistic {
    /// Correlation of two paired lists. Pairwise accuracy needs labels and
    /// cannot be computed here.
    pub fn compute(self, x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
        match self {
            Statistic::KendallTauB => kendall_tau(x, y),
            Statistic::SpearmanRho => spearman_rho(x, y),
            Statistic::PearsonR => pearson_r(x, y),
            Statistic::PairwiseAccuracy => Err(StatsError::Undefined("pairwise accuracy needs preference labels")),
        }
    }

    /// Asymptotic two-sided p-value of `value` against zero correlation.
    pub fn p_value(self, value: f64, n: usize) -> Option<f64> {
        let nf = n as f64;
        match self {
            Statistic::PearsonR | Statistic::SpearmanRho if n > 2 => {
                if value.abs() >= 1.0 {
                    return Some(0.0);
                }
                let t = value * ((nf - 2.0) / (1.0 - value * value)).sqrt();
                Some(special::student_t_two_sided(t, nf - 2.0))
            }
            Statistic::KendallTauB if n > 1 => {
                let z = 3.0 * value * (nf * (nf - 1.0)).sqrt() / (2.0 * (2.0 * nf + 5.0)).sqrt();
                Some((2.0 * special::normal_sf(z.abs())).min(1.0))
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub statistic: Statistic,
    pub value: f64,
    pub n: usize,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapSpec {
    pub resamples: usize,
    pub level: f64,
    pub seed: u64,
}

impl Default for BootstrapSpec {
    fn default() -> Self {
        Self { resamples: 1000, level: 0.95, seed: 0 }
    }
}

/// Point estimate, asymptotic p-value and optional bootstrap interval.
pub fn correlate(
    statistic: Statistic,
    metric: &[f64],
    human: &[f64],
    bootstrap: Option<BootstrapSpec>,
) -> Result<CorrelationReport, StatsError> {
    let value = statistic.compute(metric, human)?;
    let (ci_low, ci_high) = match bootstrap {
        Some(spec) => {
            let pairs: Vec<(f64, f64)> = metric.iter().copied().zip(human.iter().copied()).collect();
            let ci = bootstrap_ci(&pairs, statistic, spec.resamples, spec.level, spec.seed)?;
            (Some(ci.low), Some(ci.high))
        }
        None => (None, None),
    };
    Ok(CorrelationReport {
        statistic,
        value,
        n: metric.len(),
        ci_low,
        ci_high,
        p_value: statistic.p_value(value, metric.len()),
    })
}
