use serde::{Deserialize, Serialize};

use super::DiagnosticsError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionalBiasReport {
    /// `None` where no sequence reached the position.
    pub per_position_mean: Vec<Option<f64>>,
    /// Sample standard deviation across sequences; `None` below 2 samples.
    pub per_position_std: Vec<Option<f64>>,
    pub per_position_count: Vec<usize>,
    pub mean_positional_std: f64,
    /// Population std of the per-position means over the absolute value of
    /// their mean.
    pub cov: f64,
    pub positions_covered: usize,
}

/// Aggregates per-position scores of a dataset (one vector per sequence,
/// `None` where a position was never scored) over the first
/// `max_position` positions.
pub fn positional_bias(
    scores: &[Vec<Option<f64>>],
    max_position: usize,
) -> Result<PositionalBiasReport, DiagnosticsError> {
    if scores.len() < 2 {
        return Err(DiagnosticsError::InsufficientData(format!("{} sequences, need 2", scores.len())));
    }
    let width = scores.iter().map(Vec::len).max().unwrap_or(0).min(max_position);
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); width];
    for seq in scores {
        for (pos, v) in seq.iter().take(width).enumerate() {
            if let Some(v) = v {
                columns[pos].push(*v);
            }
        }
    }
    let per_position_count: Vec<usize> = columns.iter().map(Vec::len).collect();
    let per_position_mean: Vec<Option<f64>> =
        columns.iter().map(|c| (!c.is_empty()).then(|| c.iter().sum::<f64>() / c.len() as f64)).collect();
    let per_position_std: Vec<Option<f64>> = columns
        .iter()
        .zip(&per_position_mean)
        .map(|(c, m)| {
            let m = (*m)?;
            (c.len() >= 2).then(|| (c.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (c.len() - 1) as f64).sqrt())
        })
        .collect();

    let means: Vec<f64> = per_position_mean.iter().flatten().copied().collect();
    if means.is_empty() {
        return Err(DiagnosticsError::InsufficientData("no position was scored".into()));
    }
    let stds: Vec<f64> = per_position_std.iter().flatten().copied().collect();
    let mean_positional_std = if stds.is_empty() { 0.0 } else { stds.iter().sum::<f64>() / stds.len() as f64 };
    let grand = means.iter().sum::<f64>() / means.len() as f64;
    let spread = (means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / means.len() as f64).sqrt();
    let cov = if spread == 0.0 { 0.0 } else { spread / grand.abs() };
    Ok(PositionalBiasReport {
        per_position_mean,
        per_position_std,
        per_position_count,
        mean_positional_std,
        cov,
        positions_covered: means.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_scores() {
        let s = vec![vec![Some(-1.5); 4], vec![Some(-1.5); 3]];
        let r = positional_bias(&s, 10).unwrap();
        assert!(r.per_position_std[..3].iter().all(|s| *s == Some(0.0)));
        assert_eq!(r.cov, 0.0);
        assert_eq!(r.positions_covered, 4);
        assert_eq!(r.per_position_std[3], None);
    }

    #[test]
    fn single_position() {
        let s = vec![vec![Some(-1.0)], vec![Some(-3.0)]];
        let r = positional_bias(&s, 5).unwrap();
        assert_eq!(r.per_position_mean, vec![Some(-2.0)]);
        assert_eq!(r.per_position_std, vec![Some(2f64.sqrt())]);
        assert_eq!(r.cov, 0.0);
    }

    #[test]
    fn hand_cov_and_truncation() {
        let s = vec![vec![Some(-1.0), Some(-3.0), Some(-100.0)], vec![Some(-1.0), Some(-3.0)]];
        let r = positional_bias(&s, 2).unwrap();
        assert_eq!(r.per_position_mean.len(), 2);
        assert!((r.cov - 0.5).abs() < 1e-15);
    }

    #[test]
    fn too_few() {
        assert!(positional_bias(&[vec![Some(1.0)]], 3).is_err());
    }

    proptest! {
        #[test]
        fn std_invariant_under_translation(
            rows in prop::collection::vec(prop::collection::vec(-10.0f64..0.0, 1..6), 2..8),
            shift in -5.0f64..5.0,
        ) {
            let a: Vec<Vec<Option<f64>>> = rows.iter().map(|r| r.iter().map(|v| Some(*v)).collect()).collect();
            let b: Vec<Vec<Option<f64>>> = rows.iter().map(|r| r.iter().map(|v| Some(v + shift)).collect()).collect();
            let ra = positional_bias(&a, 10).unwrap();
            let rb = positional_bias(&b, 10).unwrap();
            for (x, y) in ra.per_position_std.iter().zip(&rb.per_position_std) {
                match (x, y) {
                    (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-9),
                    (None, None) => {}
                    _ => prop_assert!(false),
                }
            }
            prop_assert!(ra.per_position_std.iter().flatten().all(|s| *s >= 0.0));
        }
    }
}
