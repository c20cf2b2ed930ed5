//! Left-to-right bigram LM used as the autoregressive baseline.

use std::collections::HashMap;

use super::DenoiserError;
use crate::text::{TokenId, TokenSequence};

#[derive(Debug, Clone, PartialEq)]
pub struct ToyArLm {
    vocab_size: usize,
    alpha_add: f64,
    pub(super) bigrams: HashMap<(TokenId, TokenId), u64>,
    prev_totals: HashMap<TokenId, u64>,
}

impl ToyArLm {
    pub fn begin(&self) -> TokenId {
        self.vocab_size as TokenId
    }

    pub fn train(corpus: &[TokenSequence], vocab_size: usize, alpha_add: f64) -> Result<Self, DenoiserError> {
        if corpus.is_empty() {
            return Err(DenoiserError::EmptyCorpus);
        }
        if !(alpha_add > 0.0 && alpha_add.is_finite()) {
            return Err(DenoiserError::BadSmoothing(alpha_add));
        }
        let begin = vocab_size as TokenId;
        let mut bigrams = HashMap::new();
        for seq in corpus {
            let mut prev = begin;
            for &tok in seq.ids() {
                if tok as usize >= vocab_size {
                    return Err(DenoiserError::VocabMismatch { id: tok, vocab_size });
                }
                *bigrams.entry((prev, tok)).or_insert(0) += 1;
                prev = tok;
            }
        }
        Ok(Self::from_tables(vocab_size, alpha_add, bigrams))
    }

    pub(super) fn from_tables(vocab_size: usize, alpha_add: f64, bigrams: HashMap<(TokenId, TokenId), u64>) -> Self {
        let mut prev_totals = HashMap::new();
        for (&(p, _), &c) in &bigrams {
            *prev_totals.entry(p).or_insert(0) += c;
        }
        Self { vocab_size, alpha_add, bigrams, prev_totals }
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn alpha_add(&self) -> f64 {
        self.alpha_add
    }

    pub fn prob(&self, token: TokenId, prev: TokenId) -> f64 {
        let c = self.bigrams.get(&(prev, token)).copied().unwrap_or(0) as f64;
        let n = self.prev_totals.get(&prev).copied().unwrap_or(0) as f64;
        (c + self.alpha_add) / (n + self.alpha_add * self.vocab_size as f64)
    }

    /// Per-position `ln p(x_n | x_{n-1})`. Position 0 is predicted from the
    /// last context token when a nonempty context is given, otherwise from
    /// the begin sentinel.
    pub fn sequence_logprobs(
        &self,
        seq: &TokenSequence,
        context: Option<&TokenSequence>,
    ) -> Result<Vec<f64>, DenoiserError> {
        for &id in seq.ids().iter().chain(context.map(|c| c.ids()).unwrap_or(&[])) {
            if id as usize >= self.vocab_size {
                return Err(DenoiserError::VocabMismatch { id, vocab_size: self.vocab_size });
            }
        }
        let mut prev = context.and_then(|c| c.ids().last().copied()).unwrap_or(self.begin());
        Ok(seq
            .ids()
            .iter()
            .map(|&tok| {
                let lp = self.prob(tok, prev).ln();
                prev = tok;
                lp
            })
            .collect())
    }

    /// Length-normalized log-likelihood, comparable to the masked estimator's
    /// per-token scale.
    pub fn mean_logprob(&self, seq: &TokenSequence, context: Option<&TokenSequence>) -> Result<f64, DenoiserError> {
        let lps = self.sequence_logprobs(seq, context)?;
        if lps.is_empty() {
            return Err(DenoiserError::InvalidQuery("empty sequence".into()));
        }
        Ok(lps.iter().sum::<f64>() / lps.len() as f64)
    }
}
