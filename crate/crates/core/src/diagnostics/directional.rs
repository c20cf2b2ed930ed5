use serde::{Deserialize, Serialize};

use super::{mean_std, DiagnosticsError};
use crate::stats::spearman_rho;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionalReport {
    pub mean_consistency: f64,
    pub std_consistency: f64,
    /// Spearman correlation of forward and reverse scores; NaN when either
    /// side has no rank variation.
    pub rank_correlation: f64,
    pub rank_correlation_defined: bool,
    pub pair_count: usize,
    pub consistency: Vec<f64>,
    /// Consistency compares `exp(score)`, the geometric-mean token
    /// probability, rather than raw log scores.
    pub scale: String,
}

/// `min(g_f, g_r) / max(g_f, g_r)` with `g = exp(score)`.
pub fn pair_consistency(forward: f64, reverse: f64) -> f64 {
    (-(forward - reverse).abs()).exp()
}

/// Consistency of per-pair `(forward, reverse)` scores.
pub fn directional_consistency(scores: &[(f64, f64)]) -> Result<DirectionalReport, DiagnosticsError> {
    if scores.len() < 2 {
        return Err(DiagnosticsError::InsufficientData(format!("{} pairs, need 2", scores.len())));
    }
    if scores.iter().any(|(f, r)| !f.is_finite() || !r.is_finite()) {
        return Err(DiagnosticsError::InvalidConfig("scores must be finite".into()));
    }
    let consistency: Vec<f64> = scores.iter().map(|&(f, r)| pair_consistency(f, r)).collect();
    let (mean_consistency, std_consistency) = mean_std(&consistency);
    let fwd: Vec<f64> = scores.iter().map(|p| p.0).collect();
    let rev: Vec<f64> = scores.iter().map(|p| p.1).collect();
    let rho = spearman_rho(&fwd, &rev).ok();
    Ok(DirectionalReport {
        mean_consistency,
        std_consistency,
        rank_correlation: rho.unwrap_or(f64::NAN),
        rank_correlation_defined: rho.is_some(),
        pair_count: scores.len(),
        consistency,
        scale: "exp(score)".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_of_probabilities() {
        let c = pair_consistency(-1.0, -2.0);
        assert!((c - (-2f64).exp() / (-1f64).exp()).abs() < 1e-15);
        assert_eq!(pair_consistency(-3.0, -3.0), 1.0);
    }

    #[test]
    fn symmetric_scores() {
        let r = directional_consistency(&[(-1.0, -1.0), (-2.0, -2.0), (-0.5, -0.5)]).unwrap();
        assert_eq!(r.mean_consistency, 1.0);
        assert_eq!(r.rank_correlation, 1.0);
        assert!(r.rank_correlation_defined);
    }

    #[test]
    fn constant_scores_flag_rank() {
        let r = directional_consistency(&[(-1.0, -1.0); 4]).unwrap();
        assert_eq!(r.mean_consistency, 1.0);
        assert!(r.rank_correlation.is_nan());
        assert!(!r.rank_correlation_defined);
    }

    #[test]
    fn needs_two_pairs() {
        assert!(directional_consistency(&[(-1.0, -2.0)]).is_err());
    }
}
