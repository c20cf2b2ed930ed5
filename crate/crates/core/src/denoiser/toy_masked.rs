//! Interpolated neighbor-conditioned masked LM.
//!
//! Each masked slot is predicted from its nearest unmasked neighbor on each
//! side, mixing add-alpha smoothed trigram `(left, token, right)`, left and
//! right bigram and unigram estimates. Sequences are padded with begin and
//! end sentinels during training.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Denoiser, DenoiserError, DenoiserQuery, DenoiserResponse};
use crate::text::{TokenId, TokenSequence};

/// Whether the last context token may act as the left neighbor of the
/// candidate when no unmasked candidate token precedes a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SentinelPolicy {
    #[default]
    Barrier,
    Bridge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskedLmParams {
    /// Weights of the trigram, left bigram, right bigram and unigram terms.
    pub lambda: [f64; 4],
    pub alpha_add: f64,
    pub policy: SentinelPolicy,
}

impl Default for MaskedLmParams {
    fn default() -> Self {
        Self { lambda: [0.5, 0.2, 0.2, 0.1], alpha_add: 1.0, policy: SentinelPolicy::Barrier }
    }
}

impl MaskedLmParams {
    pub fn validate(&self) -> Result<(), DenoiserError> {
        let sum: f64 = self.lambda.iter().sum();
        if self.lambda.iter().any(|&l| !(l > 0.0 && l.is_finite())) || (sum - 1.0).abs() > 1e-9 {
            return Err(DenoiserError::BadLambda(self.lambda));
        }
        if !(self.alpha_add > 0.0 && self.alpha_add.is_finite()) {
            return Err(DenoiserError::BadSmoothing(self.alpha_add));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyMaskedLm {
    vocab_size: usize,
    params: MaskedLmParams,
    pub(super) trigrams: HashMap<(TokenId, TokenId, TokenId), u64>,
    pub(super) left_bigrams: HashMap<(TokenId, TokenId), u64>,
    pub(super) right_bigrams: HashMap<(TokenId, TokenId), u64>,
    pub(super) unigrams: Vec<u64>,
    // marginals derived from the tables above
    outer_totals: HashMap<(TokenId, TokenId), u64>,
    left_totals: HashMap<TokenId, u64>,
    right_totals: HashMap<TokenId, u64>,
    total: u64,
}

impl ToyMaskedLm {
    pub fn begin(&self) -> TokenId {
        self.vocab_size as TokenId
    }

    pub fn end(&self) -> TokenId {
        self.vocab_size as TokenId + 1
    }

    pub fn train(corpus: &[TokenSequence], vocab_size: usize, params: MaskedLmParams) -> Result<Self, DenoiserError> {
        if corpus.is_empty() {
            return Err(DenoiserError::EmptyCorpus);
        }
        params.validate()?;
        let begin = vocab_size as TokenId;
        let end = begin + 1;
        let mut trigrams = HashMap::new();
        let mut left_bigrams = HashMap::new();
        let mut right_bigrams = HashMap::new();
        let mut unigrams = vec![0u64; vocab_size];
        for seq in corpus {
            if let Some(&id) = seq.ids().iter().find(|&&id| id as usize >= vocab_size) {
                return Err(DenoiserError::VocabMismatch { id, vocab_size });
            }
            let ids = seq.ids();
            for (n, &tok) in ids.iter().enumerate() {
                let left = if n == 0 { begin } else { ids[n - 1] };
                let right = ids.get(n + 1).copied().unwrap_or(end);
                *trigrams.entry((left, tok, right)).or_insert(0) += 1;
                *left_bigrams.entry((left, tok)).or_insert(0) += 1;
                *right_bigrams.entry((tok, right)).or_insert(0) += 1;
                unigrams[tok as usize] += 1;
            }
        }
        Ok(Self::from_tables(vocab_size, params, trigrams, left_bigrams, right_bigrams, unigrams))
    }

    pub(super) fn from_tables(
        vocab_size: usize,
        params: MaskedLmParams,
        trigrams: HashMap<(TokenId, TokenId, TokenId), u64>,
        left_bigrams: HashMap<(TokenId, TokenId), u64>,
        right_bigrams: HashMap<(TokenId, TokenId), u64>,
        unigrams: Vec<u64>,
    ) -> Self {
        let mut outer_totals = HashMap::new();
        for (&(l, _, r), &c) in &trigrams {
            *outer_totals.entry((l, r)).or_insert(0) += c;
        }
        let mut left_totals = HashMap::new();
        for (&(l, _), &c) in &left_bigrams {
            *left_totals.entry(l).or_insert(0) += c;
        }
        let mut right_totals = HashMap::new();
        for (&(_, r), &c) in &right_bigrams {
            *right_totals.entry(r).or_insert(0) += c;
        }
        let total = unigrams.iter().sum();
        Self {
            vocab_size,
            params,
            trigrams,
            left_bigrams,
            right_bigrams,
            unigrams,
            outer_totals,
            left_totals,
            right_totals,
            total,
        }
    }

    pub fn params(&self) -> &MaskedLmParams {
        &self.params
    }

    /// Same counts, different query-time settings.
    pub fn with_params(mut self, params: MaskedLmParams) -> Result<Self, DenoiserError> {
        params.validate()?;
        self.params = params;
        Ok(self)
    }

    pub fn trigram_count(&self, left: TokenId, token: TokenId, right: TokenId) -> u64 {
        self.trigrams.get(&(left, token, right)).copied().unwrap_or(0)
    }

    /// Interpolated probability of `token` between neighbors `left` and
    /// `right` (sentinels allowed).
    pub fn prob(&self, token: TokenId, left: TokenId, right: TokenId) -> f64 {
        let a = self.params.alpha_add;
        let va = a * self.vocab_size as f64;
        let smooth = |c: u64, n: u64| (c as f64 + a) / (n as f64 + va);
        let [l3, l2l, l2r, l1] = self.params.lambda;
        let p3 =
            smooth(self.trigram_count(left, token, right), self.outer_totals.get(&(left, right)).copied().unwrap_or(0));
        let p2l = smooth(
            self.left_bigrams.get(&(left, token)).copied().unwrap_or(0),
            self.left_totals.get(&left).copied().unwrap_or(0),
        );
        let p2r = smooth(
            self.right_bigrams.get(&(token, right)).copied().unwrap_or(0),
            self.right_totals.get(&right).copied().unwrap_or(0),
        );
        let p1 = smooth(self.unigrams[token as usize], self.total);
        l3 * p3 + l2l * p2l + l2r * p2r + l1 * p1
    }

    /// Nearest unmasked neighbors of slot `pos`.
    pub fn neighbors(&self, query: &DenoiserQuery, pos: usize) -> (TokenId, TokenId) {
        let mask = query.mask_id();
        let corrupted = query.corrupted();
        let left = corrupted[..pos]
            .iter()
            .rev()
            .find(|&&id| id != mask)
            .copied()
            .or_else(|| match self.params.policy {
                SentinelPolicy::Bridge => query.context().last().copied(),
                SentinelPolicy::Barrier => None,
            })
            .unwrap_or(self.begin());
        let right = corrupted[pos + 1..].iter().find(|&&id| id != mask).copied().unwrap_or(self.end());
        (left, right)
    }
}

impl Denoiser for ToyMaskedLm {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn query(&self, query: &DenoiserQuery) -> Result<DenoiserResponse, DenoiserError> {
        query.check_vocab(self.vocab_size)?;
        let logprobs = query
            .targets()
            .iter()
            .map(|(&pos, &tok)| {
                let (l, r) = self.neighbors(query, pos);
                (pos, self.prob(tok, l, r).ln())
            })
            .collect();
        Ok(DenoiserResponse { logprobs })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn seqs(v: &[&[u32]]) -> Vec<TokenSequence> {
        v.iter().map(|s| TokenSequence(s.to_vec())).collect()
    }

    fn q(context: &[u32], corrupted: &[u32], targets: &[(usize, u32)], mask: u32) -> DenoiserQuery {
        DenoiserQuery::new(
            context.to_vec(),
            corrupted.to_vec(),
            targets.iter().copied().collect::<BTreeMap<_, _>>(),
            mask,
        )
        .unwrap()
    }

    #[test]
    fn counts_include_sentinels() {
        let m = ToyMaskedLm::train(&seqs(&[&[0, 1], &[0, 1]]), 2, MaskedLmParams::default()).unwrap();
        assert_eq!(m.trigram_count(0, 1, m.end()), 2);
        assert_eq!(m.trigram_count(m.begin(), 0, 1), 2);
    }

    #[test]
    fn unigram_add_one() {
        let m = ToyMaskedLm::train(&seqs(&[&[0, 0, 1]]), 2, MaskedLmParams::default()).unwrap();
        let a = 1.0;
        let p0 = (m.unigrams[0] as f64 + a) / (m.total as f64 + 2.0 * a);
        assert!((p0 - 0.6).abs() < 1e-15);
    }

    #[test]
    fn retraining_is_deterministic() {
        let corpus = seqs(&[&[0, 1, 2], &[2, 1, 0, 1]]);
        let a = ToyMaskedLm::train(&corpus, 3, MaskedLmParams::default()).unwrap();
        let b = ToyMaskedLm::train(&corpus, 3, MaskedLmParams::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(ToyMaskedLm::train(&[], 2, MaskedLmParams::default()), Err(DenoiserError::EmptyCorpus)));
        let bad = MaskedLmParams { lambda: [0.5, 0.5, 0.0, 0.0], ..Default::default() };
        assert!(matches!(ToyMaskedLm::train(&seqs(&[&[0]]), 2, bad), Err(DenoiserError::BadLambda(_))));
        let m = ToyMaskedLm::train(&seqs(&[&[0, 1]]), 2, MaskedLmParams::default()).unwrap();
        let foreign = q(&[], &[3, 5], &[(0, 0)], 3);
        assert!(matches!(m.query(&foreign), Err(DenoiserError::VocabMismatch { .. })));
    }

    #[test]
    fn single_token_vocabulary_is_certain() {
        let m = ToyMaskedLm::train(&seqs(&[&[0]]), 1, MaskedLmParams::default()).unwrap();
        let r = m.query(&q(&[], &[1, 1], &[(0, 0), (1, 0)], 1)).unwrap();
        for lp in r.logprobs.values() {
            assert!(lp.abs() < 1e-15);
        }
    }

    #[test]
    fn deterministic_context_with_vanishing_smoothing() {
        // (0, ?, 2) is always filled by 1 in training
        let corpus = seqs(&[&[0, 1, 2], &[0, 1, 2], &[2, 0, 0]]);
        let lp_for = |alpha: f64| {
            let params =
                MaskedLmParams { lambda: [1.0 - 3e-12, 1e-12, 1e-12, 1e-12], alpha_add: alpha, ..Default::default() };
            let m = ToyMaskedLm::train(&corpus, 3, params).unwrap();
            m.query(&q(&[], &[0, 3, 2], &[(1, 1)], 3)).unwrap().logprobs[&1]
        };
        assert!(lp_for(1e-9).abs() < 1e-8);
        assert!(lp_for(1.0) < -0.1);
    }

    #[test]
    fn hand_evaluated_mixture() {
        // corpus [0 1 2], |V| = 3, alpha = 1, slot between 0 and 2:
        // trigram 2/4, left bigram 2/4, right bigram 2/4, unigram 2/6
        let m = ToyMaskedLm::train(&seqs(&[&[0, 1, 2]]), 3, MaskedLmParams::default()).unwrap();
        let lp = m.query(&q(&[], &[0, 3, 2], &[(1, 1)], 3)).unwrap().logprobs[&1];
        let hand = 0.5 * 0.5 + 0.2 * 0.5 + 0.2 * 0.5 + 0.1 * (2.0 / 6.0);
        assert!((lp - f64::ln(hand)).abs() < 1e-14);
        assert!((hand - 29.0 / 60.0).abs() < 1e-15);
    }

    #[test]
    fn distributions_sum_to_one() {
        let corpus = seqs(&[&[0, 1, 2, 3], &[3, 2, 1], &[1, 1, 0], &[2]]);
        let m = ToyMaskedLm::train(&corpus, 4, MaskedLmParams::default()).unwrap();
        for l in 0..=m.begin() {
            for r in (0..4).chain([m.end()]) {
                let total: f64 = (0..4).map(|x| m.prob(x, l, r)).sum();
                assert!((total - 1.0).abs() < 1e-9);
                assert!((0..4).all(|x| (0.0..1.0).contains(&m.prob(x, l, r))));
            }
        }
    }

    #[test]
    fn palindromic_corpus_gives_mirror_symmetry() {
        let base: &[&[u32]] = &[&[0, 1, 2, 3], &[1, 1, 3], &[2, 0, 1]];
        let mut corpus = seqs(base);
        corpus.extend(base.iter().map(|s| TokenSequence(s.iter().rev().copied().collect())));
        let m = ToyMaskedLm::train(&corpus, 4, MaskedLmParams::default()).unwrap();
        let fwd = q(&[], &[0, 4, 4, 3], &[(1, 1), (2, 2)], 4);
        let rev = q(&[], &[3, 4, 4, 0], &[(1, 2), (2, 1)], 4);
        let a = m.query(&fwd).unwrap().logprobs;
        let b = m.query(&rev).unwrap().logprobs;
        assert!((a[&1] - b[&2]).abs() < 1e-15);
        assert!((a[&2] - b[&1]).abs() < 1e-15);
    }

    #[test]
    fn right_neighbor_matters() {
        let corpus = seqs(&[&[0, 1, 2], &[0, 2, 1]]);
        let m = ToyMaskedLm::train(&corpus, 3, MaskedLmParams::default()).unwrap();
        let a = m.query(&q(&[], &[0, 3, 2], &[(1, 1)], 3)).unwrap().logprobs[&1];
        let b = m.query(&q(&[], &[0, 3, 1], &[(1, 1)], 3)).unwrap().logprobs[&1];
        assert_ne!(a, b);
    }

    #[test]
    fn bridge_policy_uses_context() {
        let corpus = seqs(&[&[0, 1], &[2, 0]]);
        let barrier = ToyMaskedLm::train(&corpus, 3, MaskedLmParams::default()).unwrap();
        let bridge = barrier
            .clone()
            .with_params(MaskedLmParams { policy: SentinelPolicy::Bridge, ..Default::default() })
            .unwrap();
        let with_ctx = q(&[2], &[3, 1], &[(0, 0)], 3);
        let no_ctx = q(&[], &[3, 1], &[(0, 0)], 3);
        assert_eq!(barrier.query(&with_ctx).unwrap(), barrier.query(&no_ctx).unwrap());
        assert_ne!(bridge.query(&with_ctx).unwrap(), bridge.query(&no_ctx).unwrap());
        assert_eq!(bridge.neighbors(&with_ctx, 0), (2, 1));
    }
}
