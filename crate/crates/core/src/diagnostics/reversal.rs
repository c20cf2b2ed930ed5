use std::collections::HashSet;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use super::DiagnosticsError;
use crate::rng::rng_from;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ReversalPair {
    pub forward: String,
    pub reverse: String,
}

/// Past-tense relation verbs usable in both voices.
pub const DEFAULT_RELATIONS: [&str; 8] =
    ["authored", "founded", "painted", "discovered", "composed", "designed", "directed", "invented"];

const FIRST: [&str; 12] =
    ["daphne", "orin", "mirela", "tobias", "selka", "anwar", "liesl", "cato", "yvaine", "bram", "odile", "kestrel"];
const LAST: [&str; 12] = [
    "barrington",
    "vollmer",
    "ashgrove",
    "quillon",
    "marrow",
    "tennick",
    "halloway",
    "brisk",
    "oakes",
    "fenwright",
    "delacourt",
    "sable",
];
const WORKS: [&str; 12] = [
    "atlas", "lantern", "meridian", "orchard", "cascade", "harbor", "ember", "quartz", "willow", "zenith", "beacon",
    "tundra",
];
const KINDS: [&str; 6] = ["codex", "engine", "suite", "archive", "fresco", "manifesto"];

/// Distinct invented names: `count` two-word people followed by the same
/// number of two-word works, all lowercase.
pub fn fictional_entities(count: usize, seed: u64) -> (Vec<String>, Vec<String>) {
    let mut rng = rng_from(seed);
    let mut people: Vec<String> = FIRST.iter().flat_map(|f| LAST.iter().map(move |l| format!("{f} {l}"))).collect();
    let mut works: Vec<String> = WORKS.iter().flat_map(|w| KINDS.iter().map(move |k| format!("the {w} {k}"))).collect();
    people.shuffle(&mut rng);
    works.shuffle(&mut rng);
    people.truncate(count);
    works.truncate(count);
    (people, works)
}

/// `n` distinct pairs "X <verb> Y" / "Y was <verb> by X" with X drawn from
/// `subjects`, Y from `objects` and the verb from `relations`.
pub fn generate_reversal_pairs(
    relations: &[&str],
    subjects: &[String],
    objects: &[String],
    n: usize,
    seed: u64,
) -> Result<Vec<ReversalPair>, DiagnosticsError> {
    if relations.is_empty() {
        return Err(DiagnosticsError::EmptyTemplates);
    }
    if subjects.is_empty() || objects.is_empty() {
        return Err(DiagnosticsError::InsufficientData("empty entity list".into()));
    }
    let space = relations.len() * subjects.len() * objects.len();
    if n > space {
        return Err(DiagnosticsError::InsufficientData(format!("{n} pairs requested, only {space} combinations")));
    }
    let mut rng = rng_from(seed);
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n);
    for idx in index::sample(&mut rng, space, n) {
        let verb = relations[idx % relations.len()];
        let rest = idx / relations.len();
        let x = &subjects[rest % subjects.len()];
        let y = &objects[rest / subjects.len()];
        let pair = ReversalPair { forward: format!("{x} {verb} {y}"), reverse: format!("{y} was {verb} by {x}") };
        if !seen.insert(pair.clone()) {
            return Err(DiagnosticsError::InsufficientData("entity lists contain duplicates".into()));
        }
        out.push(pair);
    }
    Ok(out)
}
