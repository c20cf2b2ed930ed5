use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::DiagnosticsError;
use crate::rng::{derived_rng, rng_from, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerturbationConfig {
    pub swap_rate: f64,
    pub substitution_rate: f64,
    pub repetition_rate: f64,
    pub deletion_rate: f64,
    pub article_set: Vec<String>,
    pub preposition_set: Vec<String>,
    /// Adjacent swaps never cross these tokens.
    pub punctuation_set: Vec<String>,
    pub seed: u64,
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        Self {
            swap_rate: 0.15,
            substitution_rate: 0.5,
            repetition_rate: 0.1,
            deletion_rate: 0.1,
            article_set: strings(&["a", "an", "the"]),
            preposition_set: strings(&["in", "on", "at", "of", "to", "for", "with", "by", "from"]),
            punctuation_set: strings(&[".", ",", ";", ":", "!", "?"]),
            seed: 0,
        }
    }
}

impl PerturbationConfig {
    pub fn validate(&self) -> Result<(), DiagnosticsError> {
        for (name, r) in [
            ("swap_rate", self.swap_rate),
            ("substitution_rate", self.substitution_rate),
            ("repetition_rate", self.repetition_rate),
            ("deletion_rate", self.deletion_rate),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return Err(DiagnosticsError::InvalidConfig(format!("{name} = {r} outside [0, 1]")));
            }
        }
        Ok(())
    }

    fn substitute(&self, token: &str, rng: &mut Rng) -> Option<String> {
        for set in [&self.article_set, &self.preposition_set] {
            if let Some(i) = set.iter().position(|s| s == token) {
                if set.len() < 2 {
                    return None;
                }
                let mut j = rng.random_range(0..set.len() - 1);
                if j >= i {
                    j += 1;
                }
                return Some(set[j].clone());
            }
        }
        None
    }
}

/// Applies swaps, substitutions, repetitions and deletions, in that order.
/// At least one token always survives deletion.
pub fn perturb_tokens(tokens: &[String], cfg: &PerturbationConfig, rng: &mut Rng) -> Vec<String> {
    let mut out = tokens.to_vec();
    let is_punct = |t: &str| cfg.punctuation_set.iter().any(|p| p == t);

    let mut i = 0;
    while i + 1 < out.len() {
        let blocked = is_punct(&out[i]) || is_punct(&out[i + 1]);
        if rng.random::<f64>() < cfg.swap_rate && !blocked {
            out.swap(i, i + 1);
            i += 2;
        } else {
            i += 1;
        }
    }

    for tok in out.iter_mut() {
        if rng.random::<f64>() < cfg.substitution_rate {
            if let Some(rep) = cfg.substitute(tok, rng) {
                *tok = rep;
            }
        }
    }

    let mut repeated = Vec::with_capacity(out.len() * 2);
    for tok in out {
        let dup = rng.random::<f64>() < cfg.repetition_rate;
        if dup {
            repeated.push(tok.clone());
        }
        repeated.push(tok);
    }

    let keep: Vec<bool> = repeated.iter().map(|_| rng.random::<f64>() >= cfg.deletion_rate).collect();
    if keep.iter().any(|k| *k) {
        repeated.into_iter().zip(keep).filter_map(|(t, k)| k.then_some(t)).collect()
    } else {
        let survivor = rng.random_range(0..repeated.len());
        vec![repeated.swap_remove(survivor)]
    }
}

/// Perturbs each candidate (whitespace tokens, rejoined with single spaces);
/// sources are left untouched.
pub fn make_disfluent_relevant(
    records: &[(String, String)],
    cfg: &PerturbationConfig,
) -> Result<Vec<(String, String)>, DiagnosticsError> {
    cfg.validate()?;
    records
        .iter()
        .enumerate()
        .map(|(i, (src, cand))| {
            let tokens: Vec<String> = cand.split_whitespace().map(str::to_string).collect();
            if tokens.is_empty() {
                return Err(DiagnosticsError::EmptyCandidate(i));
            }
            let mut rng = derived_rng(cfg.seed, i as u64);
            Ok((src.clone(), perturb_tokens(&tokens, cfg, &mut rng).join(" ")))
        })
        .collect()
}

/// Reassigns candidates by a uniformly random derangement, so no candidate
/// stays with its own source.
pub fn make_fluent_irrelevant<S: Clone, C: Clone>(
    records: &[(S, C)],
    seed: u64,
) -> Result<Vec<(S, C)>, DiagnosticsError> {
    let n = records.len();
    if n < 2 {
        return Err(DiagnosticsError::TooFewRecords(n));
    }
    let mut rng = rng_from(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        perm.shuffle(&mut rng);
        if perm.iter().enumerate().all(|(i, p)| i != *p) {
            break;
        }
    }
    Ok(records.iter().zip(&perm).map(|((s, _), &p)| (s.clone(), records[p].1.clone())).collect())
}
