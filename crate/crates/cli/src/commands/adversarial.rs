use std::collections::BTreeMap;

use anyhow::Context;
use maskscore::dataset::{self, EvalRecord};
use maskscore::diagnostics::{make_disfluent_relevant, make_fluent_irrelevant, PerturbationConfig};
use serde_json::json;

use super::load_segments;
use crate::args::{AdversarialArgs, AdversarialMode};
use crate::exit;

pub fn run(args: AdversarialArgs) -> anyhow::Result<u8> {
    let records = load_segments(&args.data)?;
    let pairs: Vec<(String, String)> = records.iter().map(|r| (r.source.clone(), r.candidate.clone())).collect();
    let (perturbed, tag) = match args.mode {
        AdversarialMode::FluentIrrelevant => {
            if args.perturbation.is_some()
                || args.swap_rate.is_some()
                || args.substitution_rate.is_some()
                || args.repetition_rate.is_some()
                || args.deletion_rate.is_some()
            {
                return Err(exit::usage("perturbation settings only apply to disfluent-relevant"));
            }
            let out = make_fluent_irrelevant(&pairs, args.seed).map_err(|e| exit::data(e.to_string()))?;
            (out, "fluent-irrelevant")
        }
        AdversarialMode::DisfluentRelevant => {
            let mut cfg = match &args.perturbation {
                Some(path) => {
                    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                    serde_json::from_str(&text).map_err(|e| exit::usage(format!("{}: {e}", path.display())))?
                }
                None => PerturbationConfig::default(),
            };
            cfg.swap_rate = args.swap_rate.unwrap_or(cfg.swap_rate);
            cfg.substitution_rate = args.substitution_rate.unwrap_or(cfg.substitution_rate);
            cfg.repetition_rate = args.repetition_rate.unwrap_or(cfg.repetition_rate);
            cfg.deletion_rate = args.deletion_rate.unwrap_or(cfg.deletion_rate);
            cfg.seed = args.seed;
            cfg.validate().map_err(|e| exit::usage(e.to_string()))?;
            let out = make_disfluent_relevant(&pairs, &cfg).map_err(|e| exit::data(e.to_string()))?;
            (out, "disfluent-relevant")
        }
    };
    let out: Vec<EvalRecord> = records
        .into_iter()
        .zip(perturbed)
        .map(|(r, (source, candidate))| EvalRecord {
            id: r.id,
            source,
            candidate,
            system: r.system,
            human: BTreeMap::new(),
            split: r.split,
            extras: BTreeMap::from([("variant".to_string(), json!(tag))]),
        })
        .collect();
    dataset::write_jsonl(&out, &args.out)?;
    Ok(0)
}
