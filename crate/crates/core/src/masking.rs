//! Forward corruption process: masking strategies, timestep grids and exact
//! pattern enumeration.
//!
//! Patterns are always nonempty. A draw is taken from the independent
//! per-position Bernoulli(t) process conditioned on at least one eligible
//! position being masked, so sampled patterns and [`enumerate_patterns`]
//! describe the same distribution.

use std::collections::HashSet;
use std::io::{self, BufRead};
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{rng_from, Rng};
use crate::text::{TokenId, TokenSequence, Vocabulary};

/// Longest sequence accepted by the exhaustive enumerator.
pub const MAX_ENUMERATION_LEN: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MaskingError {
    #[error("masking strategy {0:?} requires a token class map")]
    MissingClassMap(MaskingStrategy),
    #[error("no position is eligible for {0:?} masking")]
    NoEligiblePositions(MaskingStrategy),
    #[error("pattern covers {pattern} positions but sequence has {sequence}")]
    LengthMismatch { pattern: usize, sequence: usize },
    #[error("timestep count must be at least 1")]
    ZeroTimesteps,
    #[error("sequence length {0} exceeds the enumeration limit of {MAX_ENUMERATION_LEN}")]
    SequenceTooLong(usize),
    #[error("cannot mask an empty sequence")]
    EmptySequence,
    #[error("masking rate {0} is outside (0, 1]")]
    InvalidRate(f64),
    #[error("sequence already contains mask ids")]
    NotClean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskingStrategy {
    #[default]
    Random,
    Content,
    Entity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenClass {
    Function,
    Content,
    Entity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenClassMap(pub Vec<TokenClass>);

impl TokenClassMap {
    /// Positions that a strategy may mask. Entities count as content words.
    pub fn eligible(&self, strategy: MaskingStrategy) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, c)| match strategy {
                MaskingStrategy::Random => true,
                MaskingStrategy::Content => **c != TokenClass::Function,
                MaskingStrategy::Entity => **c == TokenClass::Entity,
            })
            .map(|(i, _)| i)
            .collect()
    }
}

/// Sorted masked positions of one corruption sample.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MaskPattern {
    positions: Vec<usize>,
    source_len: usize,
}

impl MaskPattern {
    /// Builds a pattern, sorting and deduplicating `positions`. Returns
    /// `None` if a position is out of range.
    pub fn new(mut positions: Vec<usize>, source_len: usize) -> Option<Self> {
        positions.sort_unstable();
        positions.dedup();
        if positions.last().is_some_and(|&p| p >= source_len) {
            return None;
        }
        Some(Self { positions, source_len })
    }

    pub fn full(source_len: usize) -> Self {
        Self { positions: (0..source_len).collect(), source_len }
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn source_len(&self) -> usize {
        self.source_len
    }

    pub fn contains(&self, pos: usize) -> bool {
        self.positions.binary_search(&pos).is_ok()
    }
}

/// Masking rates `k/T` for `k = 1..=T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimestepGrid {
    values: Vec<f64>,
}

impl TimestepGrid {
    pub fn new(count: usize) -> Result<Self, MaskingError> {
        if count == 0 {
            return Err(MaskingError::ZeroTimesteps);
        }
        let values = (1..=count).map(|k| k as f64 / count as f64).collect();
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn count(&self) -> usize {
        self.values.len()
    }
}

pub fn timestep_grid(count: usize) -> Result<TimestepGrid, MaskingError> {
    TimestepGrid::new(count)
}

fn check_rate(t: f64) -> Result<(), MaskingError> {
    if t > 0.0 && t <= 1.0 {
        Ok(())
    } else {
        Err(MaskingError::InvalidRate(t))
    }
}

/// Draws a nonempty subset of `eligible` from the Bernoulli(t) process
/// conditioned on nonemptiness.
///
/// The index of the first masked eligible position follows a truncated
/// geometric law; every later eligible position is then masked
/// independently with probability `t`.
pub(crate) fn draw_conditioned(eligible: &[usize], t: f64, rng: &mut Rng) -> Vec<usize> {
    let m = eligible.len();
    debug_assert!(m > 0);
    let first = if t >= 1.0 {
        0
    } else {
        let log_keep = (-t).ln_1p();
        let total = -(m as f64 * log_keep).exp_m1();
        let u: f64 = rng.random::<f64>() * total;
        (0..m).find(|&j| u < -(((j + 1) as f64) * log_keep).exp_m1()).unwrap_or(m - 1)
    };
    let mut out = vec![eligible[first]];
    for &pos in &eligible[first + 1..] {
        if t >= 1.0 || rng.random::<f64>() < t {
            out.push(pos);
        }
    }
    out
}

pub(crate) fn sample_with_rng(
    seq_len: usize,
    t: f64,
    strategy: MaskingStrategy,
    class_map: Option<&TokenClassMap>,
    rng: &mut Rng,
) -> Result<MaskPattern, MaskingError> {
    if seq_len == 0 {
        return Err(MaskingError::EmptySequence);
    }
    check_rate(t)?;
    let eligible = match strategy {
        MaskingStrategy::Random => (0..seq_len).collect(),
        _ => {
            let map = class_map.ok_or(MaskingError::MissingClassMap(strategy))?;
            if map.0.len() != seq_len {
                return Err(MaskingError::LengthMismatch { pattern: map.0.len(), sequence: seq_len });
            }
            map.eligible(strategy)
        }
    };
    if eligible.is_empty() {
        return Err(MaskingError::NoEligiblePositions(strategy));
    }
    let positions = draw_conditioned(&eligible, t, rng);
    Ok(MaskPattern { positions, source_len: seq_len })
}

/// Samples one nonempty mask pattern, deterministically in `seed`.
pub fn sample_mask(
    seq_len: usize,
    t: f64,
    strategy: MaskingStrategy,
    class_map: Option<&TokenClassMap>,
    seed: u64,
) -> Result<MaskPattern, MaskingError> {
    sample_with_rng(seq_len, t, strategy, class_map, &mut rng_from(seed))
}

/// Returns a copy of `seq` with every pattern position set to `mask_id`.
pub fn apply_mask(seq: &TokenSequence, pattern: &MaskPattern, mask_id: TokenId) -> Result<TokenSequence, MaskingError> {
    if pattern.source_len != seq.len() {
        return Err(MaskingError::LengthMismatch { pattern: pattern.source_len, sequence: seq.len() });
    }
    if !seq.is_clean(mask_id) {
        return Err(MaskingError::NotClean);
    }
    let mut ids = seq.ids().to_vec();
    for &p in &pattern.positions {
        ids[p] = mask_id;
    }
    Ok(TokenSequence(ids))
}

/// Every nonempty pattern of a length-`seq_len` sequence with its
/// probability under rate `t`, renormalized over nonempty patterns.
pub fn enumerate_patterns(seq_len: usize, t: f64) -> Result<Vec<(MaskPattern, f64)>, MaskingError> {
    if seq_len > MAX_ENUMERATION_LEN {
        return Err(MaskingError::SequenceTooLong(seq_len));
    }
    if seq_len == 0 {
        return Err(MaskingError::EmptySequence);
    }
    check_rate(t)?;
    let nonempty_mass = -(seq_len as f64 * (-t).ln_1p()).exp_m1();
    let mut out = Vec::with_capacity((1usize << seq_len) - 1);
    for bits in 1u32..(1u32 << seq_len) {
        let k = bits.count_ones() as i32;
        let p = t.powi(k) * (1.0 - t).powi(seq_len as i32 - k) / nonempty_mass;
        let positions = (0..seq_len).filter(|i| bits & (1 << i) != 0).collect();
        out.push((MaskPattern { positions, source_len: seq_len }, p));
    }
    Ok(out)
}

/// Labels each token as function (stopword), entity (capitalized
/// non-stopword) or content.
pub fn classify_tokens(
    seq: &TokenSequence,
    vocab: &Vocabulary,
    stopwords: &HashSet<String>,
) -> Result<TokenClassMap, crate::text::TextError> {
    let classes = seq
        .ids()
        .iter()
        .map(|&id| {
            let tok = vocab.token(id)?;
            Ok(if stopwords.contains(tok) {
                TokenClass::Function
            } else if tok.chars().next().is_some_and(char::is_uppercase) {
                TokenClass::Entity
            } else {
                TokenClass::Content
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(TokenClassMap(classes))
}

/// Classifies sequences under a fixed vocabulary and stopword list.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenClassifier {
    vocab: Vocabulary,
    stopwords: HashSet<String>,
}

impl TokenClassifier {
    pub fn new(vocab: Vocabulary, stopwords: HashSet<String>) -> Self {
        Self { vocab, stopwords }
    }

    pub fn classify(&self, seq: &TokenSequence) -> Result<TokenClassMap, crate::text::TextError> {
        classify_tokens(seq, &self.vocab, &self.stopwords)
    }
}

/// Reads a stopword list: one token per line, blank lines ignored.
pub fn load_stopwords(path: impl AsRef<Path>) -> io::Result<HashSet<String>> {
    let file = std::fs::File::open(path)?;
    let mut out = HashSet::new();
    for line in io::BufReader::new(file).lines() {
        let line = line?;
        let tok = line.trim();
        if !tok.is_empty() {
            out.insert(tok.to_string());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::Tokenizer;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn full_rate_masks_everything() {
        for seed in 0..20 {
            let p = sample_mask(4, 1.0, MaskingStrategy::Random, None, seed).unwrap();
            assert_eq!(p.positions(), [0, 1, 2, 3]);
        }
    }

    #[test]
    fn tiny_rate_masks_exactly_one() {
        let mut hits = [0usize; 4];
        for seed in 0..4000 {
            let p = sample_mask(4, 1e-12, MaskingStrategy::Random, None, seed).unwrap();
            assert_eq!(p.len(), 1);
            hits[p.positions()[0]] += 1;
        }
        // the forced position is uniform in the t -> 0 limit
        for h in hits {
            assert!((800..1200).contains(&h), "{hits:?}");
        }
    }

    #[test]
    fn pattern_sizes_follow_conditioned_binomial() {
        let n = 100_000;
        let mut counts = [0f64; 7];
        for seed in 0..n {
            let p = sample_mask(6, 0.5, MaskingStrategy::Random, None, seed as u64).unwrap();
            counts[p.len()] += 1.0;
        }
        assert_eq!(counts[0], 0.0);
        let binom = [1.0, 6.0, 15.0, 20.0, 15.0, 6.0, 1.0];
        let chi2: f64 = (1..=6)
            .map(|k| {
                let expected = n as f64 * binom[k] / 63.0;
                (counts[k] - expected).powi(2) / expected
            })
            .sum();
        let p = 1.0 - ChiSquared::new(5.0).unwrap().cdf(chi2);
        assert!(p > 0.01, "chi2={chi2} p={p}");
    }

    #[test]
    fn marginal_frequency_matches_conditioned_rate() {
        let (len, t, n) = (5usize, 0.3f64, 40_000);
        let mut hits = vec![0f64; len];
        for seed in 0..n {
            for &p in sample_mask(len, t, MaskingStrategy::Random, None, seed).unwrap().positions() {
                hits[p] += 1.0;
            }
        }
        let expected = t / (1.0 - (1.0 - t).powi(len as i32));
        let se = (expected * (1.0 - expected) / n as f64).sqrt();
        for h in hits {
            assert!((h / n as f64 - expected).abs() < 4.0 * se);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_mask(12, 0.4, MaskingStrategy::Random, None, 99).unwrap();
        let b = sample_mask(12, 0.4, MaskingStrategy::Random, None, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn strategy_restricts_eligibility() {
        let map = TokenClassMap(vec![TokenClass::Function, TokenClass::Entity, TokenClass::Content]);
        for seed in 0..200 {
            let p = sample_mask(3, 0.9, MaskingStrategy::Content, Some(&map), seed).unwrap();
            assert!(!p.contains(0));
            let p = sample_mask(3, 0.9, MaskingStrategy::Entity, Some(&map), seed).unwrap();
            assert_eq!(p.positions(), [1]);
        }
        assert_eq!(
            sample_mask(3, 0.5, MaskingStrategy::Content, None, 0),
            Err(MaskingError::MissingClassMap(MaskingStrategy::Content))
        );
        let all_function = TokenClassMap(vec![TokenClass::Function; 3]);
        assert_eq!(
            sample_mask(3, 0.5, MaskingStrategy::Content, Some(&all_function), 0),
            Err(MaskingError::NoEligiblePositions(MaskingStrategy::Content))
        );
    }

    #[test]
    fn apply_mask_cases() {
        let seq = TokenSequence(vec![0, 1, 2]);
        let p = MaskPattern::new(vec![1], 3).unwrap();
        assert_eq!(apply_mask(&seq, &p, 3).unwrap().ids(), [0, 3, 2]);
        let empty = MaskPattern::new(vec![], 3).unwrap();
        assert_eq!(apply_mask(&seq, &empty, 3).unwrap(), seq);
        assert_eq!(apply_mask(&seq, &MaskPattern::full(3), 3).unwrap().ids(), [3, 3, 3]);
        assert_eq!(seq.ids(), [0, 1, 2]);
        assert!(matches!(apply_mask(&seq, &MaskPattern::full(2), 3), Err(MaskingError::LengthMismatch { .. })));
    }

    #[test]
    fn grids() {
        assert_eq!(timestep_grid(1).unwrap().values(), [1.0]);
        assert_eq!(timestep_grid(4).unwrap().values(), [0.25, 0.5, 0.75, 1.0]);
        let g = timestep_grid(10).unwrap();
        assert_eq!(g.count(), 10);
        assert!((g.values()[0] - 0.1).abs() < 1e-15);
        assert_eq!(*g.values().last().unwrap(), 1.0);
        assert!(g.values().windows(2).all(|w| w[0] < w[1]));
        assert_eq!(timestep_grid(0), Err(MaskingError::ZeroTimesteps));
    }

    #[test]
    fn enumeration_small_cases() {
        let one = enumerate_patterns(1, 0.5).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].0.positions(), [0]);
        assert!((one[0].1 - 1.0).abs() < 1e-15);

        let two = enumerate_patterns(2, 0.5).unwrap();
        assert_eq!(two.len(), 3);
        for (_, p) in &two {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(enumerate_patterns(21, 0.5), Err(MaskingError::SequenceTooLong(21)));
    }

    #[test]
    fn enumeration_matches_hand_weights() {
        // L = 3, t = 0.25: raw weights t^k (1-t)^(3-k), nonempty mass 1 - 0.75^3
        let t = 0.25;
        let z = 1.0 - 0.75f64.powi(3);
        for (pat, p) in enumerate_patterns(3, t).unwrap() {
            let k = pat.len() as i32;
            let hand = 0.25f64.powi(k) * 0.75f64.powi(3 - k) / z;
            assert!((p - hand).abs() < 1e-15);
        }
    }

    #[test]
    fn enumeration_normalizes() {
        for len in 1..=10 {
            for &t in &[0.01, 0.1, 0.5, 0.9, 1.0] {
                let total: f64 = enumerate_patterns(len, t).unwrap().iter().map(|(_, p)| p).sum();
                assert!((total - 1.0).abs() < 1e-12, "len={len} t={t} total={total}");
            }
        }
    }

    #[test]
    fn classify() {
        let v = Vocabulary::build(&["the Paris ran"], Tokenizer::Whitespace).unwrap();
        let seq = v.tokenize("the Paris ran", Default::default()).unwrap();
        let stop: HashSet<String> = ["the".to_string()].into();
        assert_eq!(
            classify_tokens(&seq, &v, &stop).unwrap().0,
            [TokenClass::Function, TokenClass::Entity, TokenClass::Content]
        );
        let none = classify_tokens(&seq, &v, &HashSet::new()).unwrap();
        assert!(!none.0.contains(&TokenClass::Function));
    }
}
