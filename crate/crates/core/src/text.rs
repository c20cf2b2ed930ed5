//! Vocabulary, whitespace tokenization and the integer sequence view of text.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Rendering of the mask id in detokenized text.
pub const MASK_TOKEN: &str = "[M]";

pub type TokenId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TextError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("vocabulary needs at least 2 distinct tokens, found {0}")]
    DegenerateVocabulary(usize),
    #[error("duplicate token {0:?} in vocabulary")]
    DuplicateToken(String),
    #[error("token {0:?} is reserved")]
    ReservedToken(String),
    #[error("out-of-vocabulary token {0:?}")]
    OutOfVocabulary(String),
    #[error("unknown token id {0}")]
    UnknownId(TokenId),
}

/// How raw text is split into tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tokenizer {
    #[default]
    Whitespace,
    WhitespaceLower,
}

impl Tokenizer {
    pub fn split<'a>(&self, text: &'a str) -> Vec<std::borrow::Cow<'a, str>> {
        match self {
            Tokenizer::Whitespace => text.split_whitespace().map(Into::into).collect(),
            Tokenizer::WhitespaceLower => {
                text.split_whitespace().map(|t| std::borrow::Cow::Owned(t.to_lowercase())).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OovPolicy {
    #[default]
    Error,
    Skip,
}

/// Closed token inventory. Real tokens take ids `0..size`; the mask id is
/// `size`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, TokenId>,
    tokenizer: Tokenizer,
}

impl Vocabulary {
    /// Collects distinct tokens in order of first appearance.
    pub fn build<S: AsRef<str>>(corpus: &[S], tokenizer: Tokenizer) -> Result<Self, TextError> {
        if corpus.is_empty() {
            return Err(TextError::EmptyCorpus);
        }
        let mut tokens = Vec::new();
        let mut ids = HashMap::new();
        for text in corpus {
            for tok in tokenizer.split(text.as_ref()) {
                if tok == MASK_TOKEN {
                    return Err(TextError::ReservedToken(tok.into_owned()));
                }
                if !ids.contains_key(tok.as_ref()) {
                    ids.insert(tok.to_string(), tokens.len() as TokenId);
                    tokens.push(tok.into_owned());
                }
            }
        }
        if tokens.len() < 2 {
            return Err(TextError::DegenerateVocabulary(tokens.len()));
        }
        Ok(Self { tokens, ids, tokenizer })
    }

    /// Rebuilds a vocabulary from an explicit ordered token list.
    pub fn from_tokens(tokens: Vec<String>, tokenizer: Tokenizer) -> Result<Self, TextError> {
        if tokens.len() < 2 {
            return Err(TextError::DegenerateVocabulary(tokens.len()));
        }
        let mut ids = HashMap::with_capacity(tokens.len());
        for (i, tok) in tokens.iter().enumerate() {
            if tok == MASK_TOKEN {
                return Err(TextError::ReservedToken(tok.clone()));
            }
            if ids.insert(tok.clone(), i as TokenId).is_some() {
                return Err(TextError::DuplicateToken(tok.clone()));
            }
        }
        Ok(Self { tokens, ids, tokenizer })
    }

    pub fn size(&self) -> usize {
        self.tokens.len()
    }

    pub fn mask_id(&self) -> TokenId {
        self.tokens.len() as TokenId
    }

    pub fn tokenizer(&self) -> Tokenizer {
        self.tokenizer
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.ids.get(token).copied()
    }

    /// Token string for an id; the mask id renders as `[M]`.
    pub fn token(&self, id: TokenId) -> Result<&str, TextError> {
        if id == self.mask_id() {
            return Ok(MASK_TOKEN);
        }
        self.tokens.get(id as usize).map(String::as_str).ok_or(TextError::UnknownId(id))
    }

    pub fn tokenize(&self, text: &str, oov: OovPolicy) -> Result<TokenSequence, TextError> {
        let mut ids = Vec::new();
        for tok in self.tokenizer.split(text) {
            match self.ids.get(tok.as_ref()) {
                Some(&id) => ids.push(id),
                None if oov == OovPolicy::Skip => {}
                None => return Err(TextError::OutOfVocabulary(tok.into_owned())),
            }
        }
        Ok(TokenSequence(ids))
    }

    pub fn detokenize(&self, seq: &TokenSequence) -> Result<String, TextError> {
        let parts = seq.ids().iter().map(|&id| self.token(id)).collect::<Result<Vec<_>, _>>()?;
        Ok(parts.join(" "))
    }
}

/// Token ids of one text. Clean sequences hold only real-token ids; corrupted
/// ones may also hold the mask id.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct TokenSequence(pub Vec<TokenId>);

impl TokenSequence {
    pub fn new(ids: Vec<TokenId>) -> Self {
        Self(ids)
    }

    pub fn ids(&self) -> &[TokenId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_clean(&self, mask_id: TokenId) -> bool {
        self.0.iter().all(|&id| id < mask_id)
    }
}

impl From<Vec<TokenId>> for TokenSequence {
    fn from(ids: Vec<TokenId>) -> Self {
        Self(ids)
    }
}

impl fmt::Display for TokenSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|id| id.to_string()).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ab() -> Vocabulary {
        Vocabulary::from_tokens(vec!["a".into(), "b".into()], Tokenizer::Whitespace).unwrap()
    }

    #[test]
    fn builds_in_first_appearance_order() {
        let v = Vocabulary::build(&["a b", "b c"], Tokenizer::Whitespace).unwrap();
        assert_eq!(v.tokens(), ["a", "b", "c"]);
        assert_eq!(v.size(), 3);
        assert_eq!(v.mask_id(), 3);

        let v = Vocabulary::build(&["x y z x"], Tokenizer::Whitespace).unwrap();
        assert_eq!(v.size(), 3);
        assert!(v.id("x") < v.id("y") && v.id("y") < v.id("z"));
    }

    #[test]
    fn lowering_can_collapse_to_one_token() {
        assert_eq!(Vocabulary::build(&["A a"], Tokenizer::WhitespaceLower), Err(TextError::DegenerateVocabulary(1)));
        let empty: [&str; 0] = [];
        assert_eq!(Vocabulary::build(&empty, Tokenizer::Whitespace), Err(TextError::EmptyCorpus));
    }

    #[test]
    fn tokenize_policies() {
        let v = ab();
        assert_eq!(v.tokenize("b a", OovPolicy::Error).unwrap().ids(), [1, 0]);
        assert_eq!(v.tokenize("b q a", OovPolicy::Skip).unwrap().ids(), [1, 0]);
        assert_eq!(v.tokenize("q", OovPolicy::Error), Err(TextError::OutOfVocabulary("q".into())));
    }

    #[test]
    fn detokenize_renders_mask() {
        let v = Vocabulary::from_tokens(vec!["a".into(), "b".into(), "c".into()], Tokenizer::Whitespace).unwrap();
        assert_eq!(v.detokenize(&TokenSequence(vec![1, 0])).unwrap(), "b a");
        assert_eq!(v.detokenize(&TokenSequence(vec![3])).unwrap(), "[M]");
        assert_eq!(v.detokenize(&TokenSequence(vec![4])), Err(TextError::UnknownId(4)));
    }

    proptest! {
        #[test]
        fn round_trips(ids in proptest::collection::vec(0u32..5, 0..20)) {
            let v = Vocabulary::from_tokens(
                ["p", "q", "r", "s", "t"].iter().map(|s| s.to_string()).collect(),
                Tokenizer::Whitespace,
            ).unwrap();
            let seq = TokenSequence(ids);
            let text = v.detokenize(&seq).unwrap();
            let back = v.tokenize(&text, OovPolicy::Error).unwrap();
            prop_assert_eq!(&back, &seq);
            prop_assert_eq!(v.detokenize(&back).unwrap(), text);
        }
    }
}
