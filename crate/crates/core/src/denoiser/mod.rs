//! Conditional token-probability oracles.
//!
//! A [`Denoiser`] receives a visible context plus a corrupted candidate and
//! returns, for every masked slot, the natural-log probability of the true
//! token. Positions are scored independently given the corrupted sequence.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::masking::MaskPattern;
use crate::text::{TokenId, TokenSequence};

mod model_file;
mod remote;
mod toy_ar;
mod toy_masked;

pub use model_file::{ModelFile, ToyModel, MODEL_MAGIC};
pub use remote::{RemoteConfig, RemoteDenoiser};
pub use toy_ar::ToyArLm;
pub use toy_masked::{MaskedLmParams, SentinelPolicy, ToyMaskedLm};

#[derive(Debug, Error)]
pub enum DenoiserError {
    #[error("token id {id} is outside a vocabulary of size {vocab_size}")]
    VocabMismatch { id: TokenId, vocab_size: usize },
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("interpolation weights must be positive and sum to 1, got {0:?}")]
    BadLambda([f64; 4]),
    #[error("smoothing constant must be positive, got {0}")]
    BadSmoothing(f64),
    #[error("connection to {endpoint} failed: {reason}")]
    ConnectionFailed { endpoint: String, reason: String },
    #[error("request to {0} timed out")]
    Timeout(String),
    #[error("protocol violation: {reason}")]
    ProtocolViolation { reason: String, payload: String },
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One oracle call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenoiserQuery {
    context: Vec<TokenId>,
    corrupted: Vec<TokenId>,
    targets: BTreeMap<usize, TokenId>,
    mask_id: TokenId,
}

impl DenoiserQuery {
    /// Validates that masked slots and target keys coincide and that neither
    /// context nor targets contain the mask id.
    pub fn new(
        context: Vec<TokenId>,
        corrupted: Vec<TokenId>,
        targets: BTreeMap<usize, TokenId>,
        mask_id: TokenId,
    ) -> Result<Self, DenoiserError> {
        if context.contains(&mask_id) {
            return Err(DenoiserError::InvalidQuery("context contains the mask id".into()));
        }
        let masked = corrupted.iter().filter(|&&id| id == mask_id).count();
        if masked != targets.len() {
            return Err(DenoiserError::InvalidQuery(format!("{masked} masked slots but {} targets", targets.len())));
        }
        for (&pos, &tok) in &targets {
            if corrupted.get(pos) != Some(&mask_id) {
                return Err(DenoiserError::InvalidQuery(format!("target at unmasked position {pos}")));
            }
            if tok == mask_id {
                return Err(DenoiserError::InvalidQuery(format!("target at {pos} is the mask id")));
            }
        }
        Ok(Self { context, corrupted, targets, mask_id })
    }

    /// Builds the query that masks `pattern` in a clean sequence.
    pub fn from_pattern(
        context: &TokenSequence,
        clean: &TokenSequence,
        pattern: &MaskPattern,
        mask_id: TokenId,
    ) -> Result<Self, DenoiserError> {
        let corrupted = crate::masking::apply_mask(clean, pattern, mask_id)
            .map_err(|e| DenoiserError::InvalidQuery(e.to_string()))?;
        let targets = pattern.positions().iter().map(|&p| (p, clean.ids()[p])).collect();
        Self::new(context.ids().to_vec(), corrupted.0, targets, mask_id)
    }

    pub fn context(&self) -> &[TokenId] {
        &self.context
    }

    pub fn corrupted(&self) -> &[TokenId] {
        &self.corrupted
    }

    pub fn targets(&self) -> &BTreeMap<usize, TokenId> {
        &self.targets
    }

    pub fn mask_id(&self) -> TokenId {
        self.mask_id
    }

    /// Fails if any real-token id is not below `vocab_size`.
    pub fn check_vocab(&self, vocab_size: usize) -> Result<(), DenoiserError> {
        if self.mask_id as usize != vocab_size {
            return Err(DenoiserError::VocabMismatch { id: self.mask_id, vocab_size });
        }
        let real = self
            .context
            .iter()
            .chain(self.corrupted.iter().filter(|&&id| id != self.mask_id))
            .chain(self.targets.values());
        for &id in real {
            if id as usize >= vocab_size {
                return Err(DenoiserError::VocabMismatch { id, vocab_size });
            }
        }
        Ok(())
    }
}

/// Log-probabilities of the target tokens, keyed by masked position.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DenoiserResponse {
    pub logprobs: BTreeMap<usize, f64>,
}

impl DenoiserResponse {
    pub fn total(&self) -> f64 {
        self.logprobs.values().sum()
    }
}

pub trait Denoiser: Send + Sync {
    /// Number of real tokens; the mask id equals this value.
    fn vocab_size(&self) -> usize;

    fn query(&self, query: &DenoiserQuery) -> Result<DenoiserResponse, DenoiserError>;

    fn mask_id(&self) -> TokenId {
        self.vocab_size() as TokenId
    }
}

impl<D: Denoiser + ?Sized> Denoiser for &D {
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }
    fn query(&self, query: &DenoiserQuery) -> Result<DenoiserResponse, DenoiserError> {
        (**self).query(query)
    }
}

impl<D: Denoiser + ?Sized> Denoiser for Box<D> {
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }
    fn query(&self, query: &DenoiserQuery) -> Result<DenoiserResponse, DenoiserError> {
        (**self).query(query)
    }
}

/// Assigns `-ln |V|` to every target regardless of context.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniformDenoiser {
    vocab_size: usize,
}

impl UniformDenoiser {
    pub fn new(vocab_size: usize) -> Self {
        Self { vocab_size }
    }

    pub fn logprob(&self) -> f64 {
        -(self.vocab_size as f64).ln()
    }
}

impl Denoiser for UniformDenoiser {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn query(&self, query: &DenoiserQuery) -> Result<DenoiserResponse, DenoiserError> {
        let lp = self.logprob();
        Ok(DenoiserResponse { logprobs: query.targets().keys().map(|&p| (p, lp)).collect() })
    }
}
