//! Source/candidate scoring configurations, PMI decomposition and
//! multi-timestep quality profiles.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::denoiser::{Denoiser, DenoiserError, ToyArLm};
use crate::estimator::{
    estimate, running_weighted_mean, EstimateError, EstimatorConfig, Pairing, ScoreReport, TimestepScore,
};
use crate::masking::TimestepGrid;
use crate::rng::derive_seed;
use crate::text::TokenSequence;

mod weights;

pub use weights::{learn_weights, LearnedWeights, WeightError, WeightLearningOptions};

/// Which text is masked and which is visible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoringConfig {
    /// Candidate alone.
    Mar,
    /// Candidate given the source.
    Cond,
    /// Source given the candidate.
    Rev,
    /// Weighted mix of `Cond` and `Rev`.
    Bi,
    /// `Cond - Mar`.
    Pmi,
    /// Per-timestep `Cond` (or `Mar` without a source) scores.
    Profile,
}

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Denoiser(#[from] DenoiserError),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
}

pub fn score_marginal<D: Denoiser + ?Sized>(
    denoiser: &D,
    candidate: &TokenSequence,
    cfg: &EstimatorConfig,
) -> Result<ScoreReport, EstimateError> {
    estimate(denoiser, candidate, None, cfg)
}

pub fn score_conditional<D: Denoiser + ?Sized>(
    denoiser: &D,
    candidate: &TokenSequence,
    source: &TokenSequence,
    cfg: &EstimatorConfig,
) -> Result<ScoreReport, EstimateError> {
    estimate(denoiser, candidate, Some(source), cfg)
}

/// Masks the source while the candidate stays visible.
pub fn score_reverse<D: Denoiser + ?Sized>(
    denoiser: &D,
    source: &TokenSequence,
    candidate: &TokenSequence,
    cfg: &EstimatorConfig,
) -> Result<ScoreReport, EstimateError> {
    estimate(denoiser, source, Some(candidate), cfg)
}

fn mix(alpha: f64, a: f64, b: f64) -> f64 {
    if a == b {
        a
    } else {
        alpha * a + (1.0 - alpha) * b
    }
}

/// `alpha * cond + (1 - alpha) * rev`, applied to the score and to every
/// timestep entry. Per-position scores are not defined for the mixture.
pub fn score_bidirectional<D: Denoiser + ?Sized>(
    denoiser: &D,
    candidate: &TokenSequence,
    source: &TokenSequence,
    cfg: &EstimatorConfig,
) -> Result<ScoreReport, EstimateError> {
    cfg.validate()?;
    let cond = score_conditional(denoiser, candidate, source, cfg)?;
    let rev_cfg = match cfg.bi_pairing {
        Pairing::Paired => cfg.clone(),
        Pairing::Independent => EstimatorConfig { seed: derive_seed(cfg.seed, u64::MAX), ..cfg.clone() },
    };
    let rev = score_reverse(denoiser, source, candidate, &rev_cfg)?;
    let alpha = cfg.alpha_bi;
    let per_timestep = cond
        .per_timestep
        .iter()
        .zip(&rev.per_timestep)
        .map(|(c, r)| TimestepScore { t: c.t, value: mix(alpha, c.value, r.value), samples: c.samples + r.samples })
        .collect();
    Ok(ScoreReport {
        score: mix(alpha, cond.score, rev.score),
        per_timestep,
        samples_used: cond.samples_used + rev.samples_used,
        sample_std: f64::NAN,
        config: cfg.clone(),
        per_position: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmiReport {
    pub conditional: f64,
    pub marginal: f64,
    pub pmi: f64,
    /// Per-timestep `cond - mar`.
    pub per_timestep: Vec<TimestepScore>,
}

/// Conditional minus marginal score. Both terms share seed and grid, so
/// their masking patterns coincide sample by sample.
pub fn score_pmi<D: Denoiser + ?Sized>(
    denoiser: &D,
    candidate: &TokenSequence,
    source: &TokenSequence,
    cfg: &EstimatorConfig,
) -> Result<PmiReport, EstimateError> {
    let cond = score_conditional(denoiser, candidate, source, cfg)?;
    let mar = score_marginal(denoiser, candidate, cfg)?;
    let per_timestep = cond
        .per_timestep
        .iter()
        .zip(&mar.per_timestep)
        .map(|(c, m)| TimestepScore { t: c.t, value: c.value - m.value, samples: c.samples })
        .collect();
    Ok(PmiReport { conditional: cond.score, marginal: mar.score, pmi: cond.score - mar.score, per_timestep })
}

/// Per-timestep scores with aggregation weights on the simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityProfile {
    grid: TimestepGrid,
    scores: Vec<f64>,
    weights: Vec<f64>,
}

impl QualityProfile {
    pub fn new(grid: TimestepGrid, scores: Vec<f64>, weights: Vec<f64>) -> Result<Self, ScoringError> {
        if scores.len() != grid.count() || weights.len() != grid.count() {
            return Err(ScoringError::InvalidProfile(format!(
                "grid has {} points, {} scores, {} weights",
                grid.count(),
                scores.len(),
                weights.len()
            )));
        }
        check_simplex(&weights).map_err(ScoringError::InvalidProfile)?;
        Ok(Self { grid, scores, weights })
    }

    pub fn uniform(grid: TimestepGrid, scores: Vec<f64>) -> Result<Self, ScoringError> {
        let w = vec![1.0 / grid.count() as f64; grid.count()];
        Self::new(grid, scores, w)
    }

    pub fn grid(&self) -> &TimestepGrid {
        &self.grid
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn with_weights(self, weights: Vec<f64>) -> Result<Self, ScoringError> {
        Self::new(self.grid, self.scores, weights)
    }
}

pub(crate) fn check_simplex(weights: &[f64]) -> Result<(), String> {
    if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err("weights must be finite and nonnegative".into());
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(format!("weights sum to {sum}, expected 1"));
    }
    Ok(())
}

/// Profile of `candidate`, conditioned on `source` when one is given.
/// Every grid point must receive samples, so `K >= T` is required.
pub fn quality_profile<D: Denoiser + ?Sized>(
    denoiser: &D,
    candidate: &TokenSequence,
    source: Option<&TokenSequence>,
    cfg: &EstimatorConfig,
) -> Result<QualityProfile, ScoringError> {
    if cfg.samples < cfg.timesteps {
        return Err(ScoringError::InvalidProfile(format!(
            "{} samples cannot cover {} timesteps",
            cfg.samples, cfg.timesteps
        )));
    }
    let report = estimate(denoiser, candidate, source, cfg)?;
    let scores = report.per_timestep.iter().map(|p| p.value).collect();
    QualityProfile::uniform(cfg.grid(), scores)
}

/// `sum_k w_k S(t_k)`.
pub fn aggregate_profile(profile: &QualityProfile) -> f64 {
    running_weighted_mean(profile.weights.iter().copied().zip(profile.scores.iter().copied()))
}

/// Autoregressive counterparts of the configurations, on the mean
/// per-token log-likelihood scale.
pub fn score_ar(
    model: &ToyArLm,
    config: ScoringConfig,
    candidate: &TokenSequence,
    source: Option<&TokenSequence>,
    alpha: f64,
) -> Result<f64, DenoiserError> {
    let need_source = || source.ok_or_else(|| DenoiserError::InvalidQuery("configuration needs a source".into()));
    let context = source.filter(|s| !s.is_empty());
    Ok(match config {
        ScoringConfig::Mar => model.mean_logprob(candidate, None)?,
        ScoringConfig::Cond | ScoringConfig::Profile => model.mean_logprob(candidate, context)?,
        ScoringConfig::Rev => model.mean_logprob(need_source()?, Some(candidate))?,
        ScoringConfig::Bi => {
            let cond = model.mean_logprob(candidate, context)?;
            let rev = model.mean_logprob(need_source()?, Some(candidate))?;
            mix(alpha, cond, rev)
        }
        ScoringConfig::Pmi => model.mean_logprob(candidate, context)? - model.mean_logprob(candidate, None)?,
    })
}
