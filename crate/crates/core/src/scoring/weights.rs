//! Cross-validated timestep weights maximizing rank correlation with
//! human judgments.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::QualityProfile;
use crate::rng::{derived_rng, rng_from};
use crate::stats::spearman_rho;

#[derive(Debug, Error, PartialEq)]
pub enum WeightError {
    #[error("profiles use different timestep grids (first mismatch at item {0})")]
    GridMismatch(usize),
    #[error("need at least {needed} items for {folds}-fold cross-validation, got {got}")]
    TooFewSamples { needed: usize, got: usize, folds: usize },
    #[error("{profiles} profiles but {human} human scores")]
    LengthMismatch { profiles: usize, human: usize },
    #[error("invalid options: {0}")]
    InvalidOptions(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightLearningOptions {
    pub folds: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Minimum objective gain for a local move to be accepted.
    pub min_gain: f64,
}

impl Default for WeightLearningOptions {
    fn default() -> Self {
        Self { folds: 5, restarts: 50, seed: 0, min_gain: 1e-6 }
    }
}

/// Serialized as `{"grid", "weights", "fold_rho"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnedWeights {
    pub grid: Vec<f64>,
    pub weights: Vec<f64>,
    /// Held-out Spearman of weights fit on the remaining folds.
    pub fold_rho: Vec<f64>,
}

/// Step sizes for moving mass between two coordinates, as fractions of the
/// donor's current weight.
const STEPS: [f64; 6] = [1.0, 0.5, 0.25, 0.1, 0.05, 0.01];
const MAX_ITERATIONS: usize = 1000;

struct Problem<'a> {
    scores: Vec<&'a [f64]>,
    human: &'a [f64],
}

impl Problem<'_> {
    fn rho(&self, w: &[f64], subset: &[usize]) -> f64 {
        let agg: Vec<f64> = subset.iter().map(|&i| self.scores[i].iter().zip(w).map(|(s, w)| s * w).sum()).collect();
        let hum: Vec<f64> = subset.iter().map(|&i| self.human[i]).collect();
        spearman_rho(&agg, &hum).unwrap_or(0.0)
    }

    fn objective(&self, w: &[f64], subsets: &[Vec<usize>]) -> f64 {
        subsets.iter().map(|s| self.rho(w, s)).sum::<f64>() / subsets.len() as f64
    }
}

fn distance_to_uniform(w: &[f64]) -> f64 {
    let u = 1.0 / w.len() as f64;
    w.iter().map(|x| (x - u) * (x - u)).sum()
}

/// Greedy ascent: each round takes the best of all vertex jumps and all
/// pairwise mass transfers, stopping when no move gains `min_gain`.
fn ascend(problem: &Problem, subsets: &[Vec<usize>], start: Vec<f64>, min_gain: f64) -> (Vec<f64>, f64) {
    let dim = start.len();
    let mut w = start;
    let mut value = problem.objective(&w, subsets);
    for _ in 0..MAX_ITERATIONS {
        let mut best: Option<(Vec<f64>, f64)> = None;
        let mut consider = |cand: Vec<f64>| {
            let v = problem.objective(&cand, subsets);
            if v > value + min_gain && best.as_ref().is_none_or(|(_, bv)| v > *bv) {
                best = Some((cand, v));
            }
        };
        for i in 0..dim {
            let mut vertex = vec![0.0; dim];
            vertex[i] = 1.0;
            if vertex != w {
                consider(vertex);
            }
        }
        for to in 0..dim {
            for from in 0..dim {
                if to == from || w[from] == 0.0 {
                    continue;
                }
                for step in STEPS {
                    let mut cand = w.clone();
                    let moved = if step == 1.0 { w[from] } else { w[from] * step };
                    cand[from] = if step == 1.0 { 0.0 } else { w[from] - moved };
                    cand[to] += moved;
                    consider(cand);
                }
            }
        }
        match best {
            Some((cand, v)) => {
                w = cand;
                value = v;
            }
            None => break,
        }
    }
    normalize(&mut w);
    (w, value)
}

fn normalize(w: &mut [f64]) {
    let sum: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= sum);
}

/// Uniform weights, then the vertices, then Dirichlet(1) draws, `restarts`
/// points in total (at least the uniform one).
fn starting_points(dim: usize, restarts: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut starts = vec![vec![1.0 / dim as f64; dim]];
    for i in 0..dim {
        if starts.len() >= restarts {
            break;
        }
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        starts.push(v);
    }
    let mut k = 0u64;
    while starts.len() < restarts {
        let mut rng = derived_rng(seed, k);
        k += 1;
        let mut w: Vec<f64> = (0..dim).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        normalize(&mut w);
        starts.push(w);
    }
    starts
}

fn optimize(problem: &Problem, subsets: &[Vec<usize>], opts: &WeightLearningOptions) -> Vec<f64> {
    let dim = problem.scores[0].len();
    let results: Vec<(Vec<f64>, f64)> = starting_points(dim, opts.restarts, opts.seed)
        .into_par_iter()
        .map(|s| ascend(problem, subsets, s, opts.min_gain))
        .collect();
    let mut best: Option<&(Vec<f64>, f64)> = None;
    for r in &results {
        best = match best {
            None => Some(r),
            Some(b) if r.1 > b.1 + 1e-12 => Some(r),
            Some(b) if (r.1 - b.1).abs() <= 1e-12 && distance_to_uniform(&r.0) < distance_to_uniform(&b.0) => Some(r),
            keep => keep,
        };
    }
    best.expect("at least one start").0.clone()
}

/// Fits simplex weights over the profile grid. The returned weights maximize
/// the mean per-fold Spearman correlation across all folds; `fold_rho[k]` is
/// the correlation on fold `k` of weights fit on the other folds. An
/// undefined correlation counts as 0, and ties prefer weights closer to
/// uniform, so constant human scores yield uniform weights.
pub fn learn_weights(
    profiles: &[QualityProfile],
    human: &[f64],
    opts: &WeightLearningOptions,
) -> Result<LearnedWeights, WeightError> {
    if opts.folds < 2 {
        return Err(WeightError::InvalidOptions("at least 2 folds are required"));
    }
    if opts.restarts == 0 {
        return Err(WeightError::InvalidOptions("at least 1 restart is required"));
    }
    if profiles.len() != human.len() {
        return Err(WeightError::LengthMismatch { profiles: profiles.len(), human: human.len() });
    }
    let needed = 2 * opts.folds;
    if profiles.len() < needed {
        return Err(WeightError::TooFewSamples { needed, got: profiles.len(), folds: opts.folds });
    }
    let grid = profiles[0].grid();
    if let Some(i) = profiles.iter().position(|p| p.grid() != grid) {
        return Err(WeightError::GridMismatch(i));
    }

    let problem = Problem { scores: profiles.iter().map(|p| p.scores()).collect(), human };
    let mut order: Vec<usize> = (0..profiles.len()).collect();
    order.shuffle(&mut rng_from(opts.seed));
    let folds: Vec<Vec<usize>> = (0..opts.folds)
        .map(|k| {
            let mut f: Vec<usize> = order.iter().copied().skip(k).step_by(opts.folds).collect();
            f.sort_unstable();
            f
        })
        .collect();

    let weights = optimize(&problem, &folds, opts);
    let fold_rho = (0..opts.folds)
        .map(|k| {
            let mut train: Vec<usize> =
                folds.iter().enumerate().filter(|(j, _)| *j != k).flat_map(|(_, f)| f.clone()).collect();
            train.sort_unstable();
            let w = optimize(&problem, &[train], opts);
            problem.rho(&w, &folds[k])
        })
        .collect();
    Ok(LearnedWeights { grid: grid.values().to_vec(), weights, fold_rho })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::masking::TimestepGrid;
    use crate::rng::rng_from;

    fn synthetic(n: usize, dim: usize, seed: u64) -> Vec<QualityProfile> {
        let grid = TimestepGrid::new(dim).unwrap();
        let mut rng = rng_from(seed);
        (0..n)
            .map(|_| QualityProfile::uniform(grid.clone(), (0..dim).map(|_| rng.random::<f64>()).collect()).unwrap())
            .collect()
    }

    fn opts() -> WeightLearningOptions {
        WeightLearningOptions { restarts: 12, ..Default::default() }
    }

    #[test]
    fn planted_timestep_dominates() {
        let profiles = synthetic(100, 5, 1);
        let mut rng = rng_from(2);
        let human: Vec<f64> = profiles.iter().map(|p| p.scores()[3] + 0.01 * rng.random::<f64>()).collect();
        let lw = learn_weights(&profiles, &human, &opts()).unwrap();
        assert!(lw.weights[3] >= 0.8, "{:?}", lw.weights);
        assert!((lw.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(lw.fold_rho.len(), 5);
        assert!(lw.fold_rho.iter().all(|r| *r > 0.9));
    }

    #[test]
    fn constant_human_gives_uniform() {
        let profiles = synthetic(20, 4, 3);
        let lw = learn_weights(&profiles, &[2.0; 20], &opts()).unwrap();
        assert_eq!(lw.weights, vec![0.25; 4]);
    }

    #[test]
    fn invariant_to_monotone_human_transform() {
        let profiles = synthetic(30, 3, 4);
        let mut rng = rng_from(5);
        let human: Vec<f64> = profiles.iter().map(|p| p.scores()[0] + p.scores()[2] + rng.random::<f64>()).collect();
        let warped: Vec<f64> = human.iter().map(|h| (3.0 * h).exp() - 7.0).collect();
        let a = learn_weights(&profiles, &human, &opts()).unwrap();
        let b = learn_weights(&profiles, &warped, &opts()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn input_errors() {
        let profiles = synthetic(9, 3, 6);
        let human = vec![0.0; 9];
        assert!(matches!(learn_weights(&profiles, &human, &opts()), Err(WeightError::TooFewSamples { .. })));
        let mut profiles = synthetic(10, 3, 6);
        profiles[4] = synthetic(1, 4, 7).remove(0);
        assert_eq!(learn_weights(&profiles, &[0.0; 10], &opts()), Err(WeightError::GridMismatch(4)));
    }

    #[test]
    fn json_shape() {
        let lw = LearnedWeights { grid: vec![0.5, 1.0], weights: vec![0.25, 0.75], fold_rho: vec![0.1] };
        let v = serde_json::to_value(&lw).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, ["fold_rho", "grid", "weights"]);
    }
}
