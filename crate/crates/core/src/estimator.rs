//! Monte-Carlo reconstruction score with an exhaustive exact counterpart.
//!
//! For sample `k` the masking rate is the grid value `t_{k mod T}` and the
//! pattern is drawn from a generator seeded by `(seed, k)`. The sample value
//! is the summed target log-probability weighted either by `1/|M|` (mean
//! log-probability) or by `1/(t |y|)` (ELBO). Samples are evaluated in
//! parallel and reduced in index order.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::denoiser::{Denoiser, DenoiserError, DenoiserQuery};
use crate::masking::{self, MaskPattern, MaskingError, MaskingStrategy, TimestepGrid, TokenClassMap, TokenClassifier};
use crate::rng::derived_rng;
use crate::text::TokenSequence;

#[derive(Debug, Error)]
pub enum EstimateError {
    #[error("invalid estimator configuration: {0}")]
    InvalidConfig(String),
    #[error("candidate is empty")]
    EmptyCandidate,
    #[error("sequence contains ids outside the denoiser vocabulary")]
    NotClean,
    #[error(transparent)]
    Masking(#[from] MaskingError),
    #[error("token classification failed: {0}")]
    Classification(String),
    #[error("denoiser failed on sample {sample}: {source}")]
    Backend {
        sample: usize,
        #[source]
        source: DenoiserError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// `1/|M|`: mean log-probability of the masked tokens.
    #[default]
    Mlp,
    /// `1/t`, with the `1/|y|` length factor applied once.
    Elbo,
}

/// Whether the reverse term of a bidirectional score reuses the conditional
/// term's masking seeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    #[default]
    Paired,
    Independent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Number of Monte-Carlo samples `K`.
    pub samples: usize,
    /// Number of grid timesteps `T`.
    pub timesteps: usize,
    pub weighting: Weighting,
    pub strategy: MaskingStrategy,
    pub alpha_bi: f64,
    pub bi_pairing: Pairing,
    pub seed: u64,
    /// Needed by the content and entity strategies.
    #[serde(skip)]
    pub classifier: Option<Arc<TokenClassifier>>,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            samples: 20,
            timesteps: 10,
            weighting: Weighting::Mlp,
            strategy: MaskingStrategy::Random,
            alpha_bi: 0.5,
            bi_pairing: Pairing::Paired,
            seed: 0,
            classifier: None,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<(), EstimateError> {
        if self.samples == 0 {
            return Err(EstimateError::InvalidConfig("sample count must be at least 1".into()));
        }
        if self.timesteps == 0 {
            return Err(EstimateError::InvalidConfig("timestep count must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha_bi) {
            return Err(EstimateError::InvalidConfig(format!("alpha {} outside [0, 1]", self.alpha_bi)));
        }
        Ok(())
    }

    pub fn grid(&self) -> TimestepGrid {
        TimestepGrid::new(self.timesteps).expect("validated timestep count")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimestepScore {
    pub t: f64,
    pub value: f64,
    /// Samples drawn at this rate; 0 for exact reports.
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositionScore {
    pub mean: f64,
    /// Samples in which the position was masked (0 for exact reports).
    pub times_masked: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub score: f64,
    pub per_timestep: Vec<TimestepScore>,
    pub samples_used: usize,
    /// Standard deviation of the per-sample weighted values.
    pub sample_std: f64,
    pub config: EstimatorConfig,
    /// Mean log-probability of each candidate position over the samples
    /// that masked it; `None` if never masked.
    pub per_position: Vec<Option<PositionScore>>,
}

/// Incremental mean; exact when every input is equal.
pub(crate) fn running_mean<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut mean = 0.0;
    for (i, x) in values.into_iter().enumerate() {
        mean += (x - mean) / (i + 1) as f64;
    }
    mean
}

/// Incremental weighted mean; zero weights are skipped.
pub(crate) fn running_weighted_mean<I: IntoIterator<Item = (f64, f64)>>(pairs: I) -> f64 {
    let (mut mean, mut acc) = (0.0, 0.0);
    for (w, x) in pairs {
        if w == 0.0 {
            continue;
        }
        acc += w;
        mean += (w / acc) * (x - mean);
    }
    mean
}

fn check_sequence(seq: &TokenSequence, vocab_size: usize) -> Result<(), EstimateError> {
    if seq.ids().iter().any(|&id| id as usize >= vocab_size) {
        return Err(EstimateError::NotClean);
    }
    Ok(())
}

fn class_map_for(cfg: &EstimatorConfig, candidate: &TokenSequence) -> Result<Option<TokenClassMap>, EstimateError> {
    if cfg.strategy == MaskingStrategy::Random {
        return Ok(None);
    }
    let classifier = cfg.classifier.as_ref().ok_or(MaskingError::MissingClassMap(cfg.strategy))?;
    classifier.classify(candidate).map(Some).map_err(|e| EstimateError::Classification(e.to_string()))
}

/// Weighted value of one masking pattern. The MLP mean is a running mean so
/// that equal log-probabilities reproduce themselves exactly.
fn pattern_value(weighting: Weighting, logprobs: &[(usize, f64)], t: f64, len: usize) -> f64 {
    match weighting {
        Weighting::Mlp => running_mean(logprobs.iter().map(|e| e.1)),
        Weighting::Elbo => logprobs.iter().map(|e| e.1).sum::<f64>() / t / len as f64,
    }
}

struct Sample {
    t_index: usize,
    value: f64,
    logprobs: Vec<(usize, f64)>,
}

/// Monte-Carlo estimate of the reconstruction score of `candidate` with
/// `source` fully visible.
pub fn estimate<D: Denoiser + ?Sized>(
    denoiser: &D,
    candidate: &TokenSequence,
    source: Option<&TokenSequence>,
    cfg: &EstimatorConfig,
) -> Result<ScoreReport, EstimateError> {
    cfg.validate()?;
    if candidate.is_empty() {
        return Err(EstimateError::EmptyCandidate);
    }
    let vocab_size = denoiser.vocab_size();
    check_sequence(candidate, vocab_size)?;
    let empty = TokenSequence::default();
    let context = source.unwrap_or(&empty);
    check_sequence(context, vocab_size)?;
    let class_map = class_map_for(cfg, candidate)?;
    let grid = cfg.grid();
    let mask_id = denoiser.mask_id();
    let len = candidate.len();

    let results: Vec<Result<Sample, EstimateError>> = (0..cfg.samples)
        .into_par_iter()
        .map(|k| {
            let t_index = k % grid.count();
            let t = grid.values()[t_index];
            let mut rng = derived_rng(cfg.seed, k as u64);
            let pattern = masking::sample_with_rng(len, t, cfg.strategy, class_map.as_ref(), &mut rng)?;
            let query = DenoiserQuery::from_pattern(context, candidate, &pattern, mask_id)
                .map_err(|source| EstimateError::Backend { sample: k, source })?;
            let resp = denoiser.query(&query).map_err(|source| EstimateError::Backend { sample: k, source })?;
            let logprobs: Vec<(usize, f64)> = resp.logprobs.into_iter().collect();
            let value = pattern_value(cfg.weighting, &logprobs, t, len);
            Ok(Sample { t_index, value, logprobs })
        })
        .collect();
    let samples = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(reduce(&samples, &grid, len, cfg))
}

fn reduce(samples: &[Sample], grid: &TimestepGrid, len: usize, cfg: &EstimatorConfig) -> ScoreReport {
    let mut per_t: Vec<Vec<f64>> = vec![Vec::new(); grid.count()];
    let mut per_pos: Vec<Vec<f64>> = vec![Vec::new(); len];
    for s in samples {
        per_t[s.t_index].push(s.value);
        for &(pos, lp) in &s.logprobs {
            per_pos[pos].push(lp);
        }
    }
    let per_timestep: Vec<TimestepScore> = grid
        .values()
        .iter()
        .zip(&per_t)
        .filter(|(_, v)| !v.is_empty())
        .map(|(&t, v)| TimestepScore { t, value: running_mean(v.iter().copied()), samples: v.len() })
        .collect();
    let score = running_mean(per_timestep.iter().map(|p| p.value));
    let overall = running_mean(samples.iter().map(|s| s.value));
    let sample_std = if samples.len() > 1 {
        (samples.iter().map(|s| (s.value - overall).powi(2)).sum::<f64>() / (samples.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    let per_position = per_pos
        .iter()
        .map(|v| {
            (!v.is_empty()).then(|| PositionScore { mean: running_mean(v.iter().copied()), times_masked: v.len() })
        })
        .collect();
    ScoreReport { score, per_timestep, samples_used: samples.len(), sample_std, config: cfg.clone(), per_position }
}

/// Exact expectation of the estimator over every nonempty masking pattern at
/// each grid rate. Only the random strategy is supported.
pub fn exact_estimate<D: Denoiser + ?Sized>(
    denoiser: &D,
    candidate: &TokenSequence,
    source: Option<&TokenSequence>,
    grid: &TimestepGrid,
    weighting: Weighting,
) -> Result<ScoreReport, EstimateError> {
    let len = candidate.len();
    if len == 0 {
        return Err(EstimateError::EmptyCandidate);
    }
    if len > masking::MAX_ENUMERATION_LEN {
        return Err(MaskingError::SequenceTooLong(len).into());
    }
    let vocab_size = denoiser.vocab_size();
    check_sequence(candidate, vocab_size)?;
    let empty = TokenSequence::default();
    let context = source.unwrap_or(&empty);
    check_sequence(context, vocab_size)?;
    let mask_id = denoiser.mask_id();

    // one query per pattern, shared across rates
    let patterns: Vec<MaskPattern> = masking::enumerate_patterns(len, 0.5)?.into_iter().map(|(p, _)| p).collect();
    let responses: Vec<Vec<(usize, f64)>> = patterns
        .par_iter()
        .enumerate()
        .map(|(i, pattern)| {
            let q = DenoiserQuery::from_pattern(context, candidate, pattern, mask_id)
                .map_err(|source| EstimateError::Backend { sample: i, source })?;
            let r = denoiser.query(&q).map_err(|source| EstimateError::Backend { sample: i, source })?;
            Ok(r.logprobs.into_iter().collect())
        })
        .collect::<Result<_, EstimateError>>()?;

    let mut per_timestep = Vec::with_capacity(grid.count());
    let mut pos_num = vec![0.0; len];
    let mut pos_den = vec![0.0; len];
    for &t in grid.values() {
        let weights = masking::enumerate_patterns(len, t)?;
        let value = running_weighted_mean(
            weights.iter().zip(&responses).map(|((_, p), lps)| (*p, pattern_value(weighting, lps, t, len))),
        );
        for ((_, p), lps) in weights.iter().zip(&responses) {
            for &(pos, lp) in lps {
                pos_num[pos] += p * lp;
                pos_den[pos] += p;
            }
        }
        per_timestep.push(TimestepScore { t, value, samples: 0 });
    }
    let score = running_mean(per_timestep.iter().map(|p| p.value));
    let per_position =
        pos_num.iter().zip(&pos_den).map(|(n, d)| Some(PositionScore { mean: n / d, times_masked: 0 })).collect();
    let config = EstimatorConfig { samples: 0, timesteps: grid.count(), weighting, ..Default::default() };
    Ok(ScoreReport { score, per_timestep, samples_used: 0, sample_std: 0.0, config, per_position })
}

/// Mean log-probability of each position over the samples that masked it.
pub fn per_position_scores<D: Denoiser + ?Sized>(
    denoiser: &D,
    seq: &TokenSequence,
    source: Option<&TokenSequence>,
    cfg: &EstimatorConfig,
) -> Result<Vec<Option<f64>>, EstimateError> {
    let report = estimate(denoiser, seq, source, cfg)?;
    Ok(report.per_position.iter().map(|p| p.map(|p| p.mean)).collect())
}
