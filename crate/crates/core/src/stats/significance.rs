//! Williams test for dependent correlations and the Mann-Whitney U test.

use serde::{Deserialize, Serialize};

use super::special::{normal_sf, student_t_sf, student_t_two_sided};
use super::StatsError;

/// Largest pooled sample size tested by exhaustive enumeration.
pub const MANN_WHITNEY_EXACT_MAX: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilliamsResult {
    pub t: f64,
    pub df: f64,
    pub p_two_sided: f64,
    /// `P(T > t)`: evidence that `r12 > r13`.
    pub p_greater: f64,
    /// `P(T < t)`: evidence that `r12 < r13`.
    pub p_less: f64,
}

/// Williams' t for `r12` vs `r13`, where variable 1 (typically the human
/// scores) is shared and `r23` correlates the two competitors.
pub fn williams_test(r12: f64, r13: f64, r23: f64, n: usize) -> Result<WilliamsResult, StatsError> {
    if n < 4 {
        return Err(StatsError::TooFew { needed: 4, got: n });
    }
    if [r12, r13, r23].iter().any(|r| r.is_nan() || r.abs() >= 1.0) {
        return Err(StatsError::DegenerateInput("correlations must lie in (-1, 1)"));
    }
    let nf = n as f64;
    let det = 1.0 - r12 * r12 - r13 * r13 - r23 * r23 + 2.0 * r12 * r13 * r23;
    if det <= 0.0 {
        return Err(StatsError::DegenerateInput("correlation matrix is not positive definite"));
    }
    let rbar = (r12 + r13) / 2.0;
    let denom = 2.0 * ((nf - 1.0) / (nf - 3.0)) * det + rbar * rbar * (1.0 - r23).powi(3);
    let t = (r12 - r13) * (((nf - 1.0) * (1.0 + r23)) / denom).sqrt();
    let df = nf - 3.0;
    let p_greater = student_t_sf(t, df);
    Ok(WilliamsResult {
        t,
        df,
        p_two_sided: if t == 0.0 { 1.0 } else { student_t_two_sided(t, df) },
        p_greater,
        p_less: 1.0 - p_greater,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// U statistic of the first sample: pairs it wins plus half its ties.
    pub u: f64,
    pub p_value: f64,
    pub exact: bool,
}

fn u_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut u = 0.0;
    for x in a {
        for y in b {
            if x > y {
                u += 1.0;
            } else if x == y {
                u += 0.5;
            }
        }
    }
    u
}

/// Two-sided Mann-Whitney U test. Small samples are tested by enumerating
/// every assignment of the pooled values; larger ones use the tie-corrected
/// normal approximation with continuity correction.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::TooFew { needed: 1, got: 0 });
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let (n1, n2) = (a.len(), b.len());
    let u = u_statistic(a, b);
    let mean = (n1 * n2) as f64 / 2.0;
    let n = n1 + n2;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();

    if n <= MANN_WHITNEY_EXACT_MAX {
        let ranks = super::correlation::average_ranks(&pooled);
        let offset = (n1 * (n1 + 1)) as f64 / 2.0;
        let observed = (u - mean).abs();
        let (mut extreme, mut total) = (0u64, 0u64);
        for bits in 0u32..(1u32 << n) {
            if bits.count_ones() as usize != n1 {
                continue;
            }
            let rank_sum: f64 = (0..n).filter(|i| bits & (1 << i) != 0).map(|i| ranks[i]).sum();
            total += 1;
            if ((rank_sum - offset) - mean).abs() >= observed - 1e-9 {
                extreme += 1;
            }
        }
        return Ok(MannWhitney { u, p_value: extreme as f64 / total as f64, exact: true });
    }

    let nf = n as f64;
    let mut sorted = pooled;
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|&&v| v == sorted[i]).count();
        let t = j as f64;
        tie_term += t * t * t - t;
        i += j;
    }
    let var = (n1 * n2) as f64 / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
    if var <= 0.0 {
        return Ok(MannWhitney { u, p_value: 1.0, exact: false });
    }
    let z = (((u - mean).abs() - 0.5) / var.sqrt()).max(0.0);
    Ok(MannWhitney { u, p_value: (2.0 * normal_sf(z)).min(1.0), exact: false })
}
