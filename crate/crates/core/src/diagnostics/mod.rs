//! Positional and directional bias diagnostics and adversarial test-set
//! construction.

use thiserror::Error;

use crate::estimator::EstimateError;
use crate::stats::StatsError;

mod adversarial;
mod directional;
mod perturb;
mod positional;
mod reversal;

pub use adversarial::{pmi_adversarial_report, AdversarialReport, ColumnStats, PairwiseTest, VariantStats};
pub use directional::{directional_consistency, pair_consistency, DirectionalReport};
pub use perturb::{make_disfluent_relevant, make_fluent_irrelevant, perturb_tokens, PerturbationConfig};
pub use positional::{positional_bias, PositionalBiasReport};
pub use reversal::{fictional_entities, generate_reversal_pairs, ReversalPair, DEFAULT_RELATIONS};

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("need at least 2 records, got {0}")]
    TooFewRecords(usize),
    #[error("record {0} has an empty candidate")]
    EmptyCandidate(usize),
    #[error("variant {variant:?} does not match the original sources at record {record}")]
    MismatchedSources { variant: String, record: usize },
    #[error("no relation templates")]
    EmptyTemplates,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

pub(crate) fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() < 2 { 0.0 } else { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) };
    (mean, var.sqrt())
}
