use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mean_std, DiagnosticsError};
use crate::denoiser::Denoiser;
use crate::estimator::EstimatorConfig;
use crate::scoring::{score_pmi, PmiReport};
use crate::stats::mann_whitney_u;
use crate::text::TokenSequence;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantStats {
    pub variant: String,
    pub n: usize,
    pub conditional: ColumnStats,
    pub marginal: ColumnStats,
    pub pmi: ColumnStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTest {
    pub a: String,
    pub b: String,
    pub column: String,
    pub u: f64,
    pub p_value: f64,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversarialReport {
    pub variants: Vec<VariantStats>,
    pub tests: Vec<PairwiseTest>,
    /// Per-record reports, indexed like `variants`.
    pub records: Vec<Vec<PmiReport>>,
}

const COLUMNS: [&str; 3] = ["conditional", "marginal", "pmi"];

fn column(r: &PmiReport, name: &str) -> f64 {
    match name {
        "conditional" => r.conditional,
        "marginal" => r.marginal,
        _ => r.pmi,
    }
}

impl AdversarialReport {
    pub fn variant(&self, name: &str) -> Option<&VariantStats> {
        self.variants.iter().find(|v| v.variant == name)
    }

    pub fn test(&self, a: &str, b: &str, column: &str) -> Option<&PairwiseTest> {
        self.tests.iter().find(|t| t.column == column && ((t.a == a && t.b == b) || (t.a == b && t.b == a)))
    }

    /// One row per variant, then one row per test.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("variant\tn\tcond_mean\tcond_std\tmar_mean\tmar_std\tpmi_mean\tpmi_std\n");
        for v in &self.variants {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                v.variant,
                v.n,
                v.conditional.mean,
                v.conditional.std,
                v.marginal.mean,
                v.marginal.std,
                v.pmi.mean,
                v.pmi.std
            );
        }
        s.push_str("\na\tb\tcolumn\tu\tp_value\texact\n");
        for t in &self.tests {
            let _ = writeln!(s, "{}\t{}\t{}\t{}\t{}\t{}", t.a, t.b, t.column, t.u, t.p_value, t.exact);
        }
        s
    }
}

/// PMI decomposition over named variants of one set of `(source, candidate)`
/// records. Every variant must share the sources of the first one. Each
/// pair of variants is compared per column with a Mann-Whitney U test.
pub fn pmi_adversarial_report<D: Denoiser + ?Sized>(
    denoiser: &D,
    variants: &[(&str, &[(TokenSequence, TokenSequence)])],
    cfg: &EstimatorConfig,
) -> Result<AdversarialReport, DiagnosticsError> {
    let Some((_, base)) = variants.first() else {
        return Err(DiagnosticsError::InsufficientData("no variants".into()));
    };
    if base.is_empty() {
        return Err(DiagnosticsError::InsufficientData("no records".into()));
    }
    for (name, recs) in variants {
        if recs.len() != base.len() {
            return Err(DiagnosticsError::MismatchedSources {
                variant: name.to_string(),
                record: recs.len().min(base.len()),
            });
        }
        if let Some(i) = recs.iter().zip(base.iter()).position(|(a, b)| a.0 != b.0) {
            return Err(DiagnosticsError::MismatchedSources { variant: name.to_string(), record: i });
        }
    }

    let mut records = Vec::with_capacity(variants.len());
    for (_, recs) in variants {
        let reports: Vec<PmiReport> =
            recs.par_iter().map(|(src, cand)| score_pmi(denoiser, cand, src, cfg)).collect::<Result<_, _>>()?;
        records.push(reports);
    }

    let stats = |reports: &[PmiReport], col: &str| {
        let xs: Vec<f64> = reports.iter().map(|r| column(r, col)).collect();
        let (mean, std) = mean_std(&xs);
        ColumnStats { mean, std }
    };
    let summaries = variants
        .iter()
        .zip(&records)
        .map(|((name, _), reps)| VariantStats {
            variant: name.to_string(),
            n: reps.len(),
            conditional: stats(reps, "conditional"),
            marginal: stats(reps, "marginal"),
            pmi: stats(reps, "pmi"),
        })
        .collect();

    let mut tests = Vec::new();
    for i in 0..variants.len() {
        for j in i + 1..variants.len() {
            for col in COLUMNS {
                let a: Vec<f64> = records[i].iter().map(|r| column(r, col)).collect();
                let b: Vec<f64> = records[j].iter().map(|r| column(r, col)).collect();
                let mw = mann_whitney_u(&a, &b)?;
                tests.push(PairwiseTest {
                    a: variants[i].0.to_string(),
                    b: variants[j].0.to_string(),
                    column: col.to_string(),
                    u: mw.u,
                    p_value: mw.p_value,
                    exact: mw.exact,
                });
            }
        }
    }
    Ok(AdversarialReport { variants: summaries, tests, records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denoiser::UniformDenoiser;

    #[test]
    fn uniform_backend_null() {
        let d = UniformDenoiser::new(7);
        let recs: Vec<(TokenSequence, TokenSequence)> =
            (0..15u32).map(|i| (TokenSequence(vec![i % 7, 1]), TokenSequence(vec![2, i % 5, 3]))).collect();
        let shuffled: Vec<_> =
            recs.iter().map(|(s, c)| (s.clone(), TokenSequence(c.0.iter().rev().copied().collect()))).collect();
        let cfg = EstimatorConfig { samples: 4, timesteps: 2, ..Default::default() };
        let r = pmi_adversarial_report(&d, &[("original", &recs), ("other", &shuffled)], &cfg).unwrap();
        assert_eq!(r.variants[0].pmi.mean, 0.0);
        assert!(r.records.iter().flatten().all(|p| p.pmi == 0.0));
        assert!(r.tests.iter().all(|t| t.p_value > 0.05));
        assert_eq!(r.tests.len(), 3);
        assert!(r.to_tsv().starts_with("variant\tn"));
    }

    #[test]
    fn mismatched_sources() {
        let d = UniformDenoiser::new(3);
        let a = vec![(TokenSequence(vec![0]), TokenSequence(vec![1]))];
        let b = vec![(TokenSequence(vec![2]), TokenSequence(vec![1]))];
        let cfg = EstimatorConfig::default();
        assert!(matches!(
            pmi_adversarial_report(&d, &[("a", &a), ("b", &b)], &cfg),
            Err(DiagnosticsError::MismatchedSources { record: 0, .. })
        ));
    }
}
