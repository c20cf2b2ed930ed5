//! Versioned binary persistence for the toy backends.
//!
//! Layout (little-endian): magic `DSTOY1`, model kind byte (1 masked, 2
//! autoregressive), tokenizer byte, the vocabulary as a `u32` count of
//! `u32`-length-prefixed UTF-8 tokens, model parameters, then each count
//! table as a `u64` entry count followed by its entries in ascending key
//! order.

use std::collections::HashMap;
use std::hash::Hash;
use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use super::{DenoiserError, MaskedLmParams, SentinelPolicy, ToyArLm, ToyMaskedLm};
use crate::text::{TokenId, Tokenizer, Vocabulary};

pub const MODEL_MAGIC: &[u8; 6] = b"DSTOY1";

const KIND_MASKED: u8 = 1;
const KIND_AR: u8 = 2;

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum ToyModel {
    Masked(ToyMaskedLm),
    Ar(ToyArLm),
}

/// A trained toy model together with the vocabulary it was trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub vocab: Vocabulary,
    pub model: ToyModel,
}

fn fmt_err(msg: impl Into<String>) -> DenoiserError {
    DenoiserError::Format(msg.into())
}

fn sorted<K: Ord + Copy + Hash, V: Copy>(map: &HashMap<K, V>) -> Vec<(K, V)> {
    let mut v: Vec<_> = map.iter().map(|(&k, &v)| (k, v)).collect();
    v.sort_unstable_by_key(|e| e.0);
    v
}

fn write_pairs<W: Write>(w: &mut W, map: &HashMap<(TokenId, TokenId), u64>) -> std::io::Result<()> {
    let entries = sorted(map);
    w.write_u64::<LE>(entries.len() as u64)?;
    for ((a, b), c) in entries {
        w.write_u32::<LE>(a)?;
        w.write_u32::<LE>(b)?;
        w.write_u64::<LE>(c)?;
    }
    Ok(())
}

fn read_pairs<R: Read>(r: &mut R) -> Result<HashMap<(TokenId, TokenId), u64>, DenoiserError> {
    let n = r.read_u64::<LE>()?;
    let mut map = HashMap::new();
    for _ in 0..n {
        let key = (r.read_u32::<LE>()?, r.read_u32::<LE>()?);
        map.insert(key, r.read_u64::<LE>()?);
    }
    Ok(map)
}

impl ModelFile {
    pub fn vocab_size(&self) -> usize {
        self.vocab.size()
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<(), DenoiserError> {
        w.write_all(MODEL_MAGIC)?;
        w.write_u8(match self.model {
            ToyModel::Masked(_) => KIND_MASKED,
            ToyModel::Ar(_) => KIND_AR,
        })?;
        w.write_u8(match self.vocab.tokenizer() {
            Tokenizer::Whitespace => 0,
            Tokenizer::WhitespaceLower => 1,
        })?;
        w.write_u32::<LE>(self.vocab.size() as u32)?;
        for tok in self.vocab.tokens() {
            w.write_u32::<LE>(tok.len() as u32)?;
            w.write_all(tok.as_bytes())?;
        }
        match &self.model {
            ToyModel::Masked(m) => {
                let p = m.params();
                for l in p.lambda {
                    w.write_f64::<LE>(l)?;
                }
                w.write_f64::<LE>(p.alpha_add)?;
                w.write_u8(match p.policy {
                    SentinelPolicy::Barrier => 0,
                    SentinelPolicy::Bridge => 1,
                })?;
                let tri = sorted(&m.trigrams);
                w.write_u64::<LE>(tri.len() as u64)?;
                for ((a, b, c), n) in tri {
                    w.write_u32::<LE>(a)?;
                    w.write_u32::<LE>(b)?;
                    w.write_u32::<LE>(c)?;
                    w.write_u64::<LE>(n)?;
                }
                write_pairs(w, &m.left_bigrams)?;
                write_pairs(w, &m.right_bigrams)?;
                w.write_u64::<LE>(m.unigrams.len() as u64)?;
                for &c in &m.unigrams {
                    w.write_u64::<LE>(c)?;
                }
            }
            ToyModel::Ar(m) => {
                w.write_f64::<LE>(m.alpha_add())?;
                write_pairs(w, &m.bigrams)?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self, DenoiserError> {
        let mut magic = [0u8; 6];
        r.read_exact(&mut magic)?;
        if &magic != MODEL_MAGIC {
            return Err(fmt_err(format!("bad magic {magic:?}")));
        }
        let kind = r.read_u8()?;
        let tokenizer = match r.read_u8()? {
            0 => Tokenizer::Whitespace,
            1 => Tokenizer::WhitespaceLower,
            t => return Err(fmt_err(format!("unknown tokenizer tag {t}"))),
        };
        let n = r.read_u32::<LE>()? as usize;
        let mut tokens = Vec::with_capacity(n.min(1 << 20));
        for _ in 0..n {
            let len = r.read_u32::<LE>()? as usize;
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf)?;
            tokens.push(String::from_utf8(buf).map_err(|e| fmt_err(e.to_string()))?);
        }
        let vocab = Vocabulary::from_tokens(tokens, tokenizer).map_err(|e| fmt_err(e.to_string()))?;
        let vs = vocab.size();
        let model = match kind {
            KIND_MASKED => {
                let mut lambda = [0.0; 4];
                for l in &mut lambda {
                    *l = r.read_f64::<LE>()?;
                }
                let alpha_add = r.read_f64::<LE>()?;
                let policy = match r.read_u8()? {
                    0 => SentinelPolicy::Barrier,
                    1 => SentinelPolicy::Bridge,
                    p => return Err(fmt_err(format!("unknown sentinel policy {p}"))),
                };
                let params = MaskedLmParams { lambda, alpha_add, policy };
                params.validate()?;
                let n = r.read_u64::<LE>()?;
                let mut tri = HashMap::new();
                for _ in 0..n {
                    let key = (r.read_u32::<LE>()?, r.read_u32::<LE>()?, r.read_u32::<LE>()?);
                    tri.insert(key, r.read_u64::<LE>()?);
                }
                let left = read_pairs(r)?;
                let right = read_pairs(r)?;
                let n = r.read_u64::<LE>()? as usize;
                if n != vs {
                    return Err(fmt_err(format!("unigram table has {n} entries for {vs} tokens")));
                }
                let uni = (0..n).map(|_| r.read_u64::<LE>()).collect::<Result<_, _>>()?;
                ToyModel::Masked(ToyMaskedLm::from_tables(vs, params, tri, left, right, uni))
            }
            KIND_AR => {
                let alpha = r.read_f64::<LE>()?;
                if alpha.is_nan() || alpha <= 0.0 {
                    return Err(DenoiserError::BadSmoothing(alpha));
                }
                ToyModel::Ar(ToyArLm::from_tables(vs, alpha, read_pairs(r)?))
            }
            k => return Err(fmt_err(format!("unknown model kind {k}"))),
        };
        Ok(Self { vocab, model })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), DenoiserError> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DenoiserError> {
        let bytes = std::fs::read(path)?;
        Self::read_from(&mut bytes.as_slice())
    }
}
