use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Context;
use maskscore::dataset::{self, timestep_key, ScoreRow};
use maskscore::diagnostics::pmi_adversarial_report;
use maskscore::scoring::LearnedWeights;
use maskscore::TokenSequence;
use rayon::prelude::*;
use serde_json::json;

use super::{load_pairs, load_segments, report, write_text};
use crate::args::{KindArg, PmiArgs, ProfileArgs, ScoreArgs, ScoringArg};
use crate::backend::Backend;
use crate::exit;
use crate::run::RunConfig;

struct Item {
    id: String,
    source: String,
    candidate: String,
    extras: BTreeMap<String, serde_json::Value>,
}

fn load_weights(path: &Path, timesteps: usize) -> anyhow::Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let lw: LearnedWeights = serde_json::from_str(&text).map_err(|e| exit::data(format!("{}: {e}", path.display())))?;
    if lw.grid.len() != timesteps || lw.weights.len() != timesteps {
        return Err(exit::usage(format!("weights cover {} timesteps but --timesteps is {timesteps}", lw.grid.len())));
    }
    Ok(lw.weights)
}

fn score_items(
    run: &RunConfig,
    backend: &Backend,
    items: &[Item],
    weights: Option<&[f64]>,
) -> anyhow::Result<(Vec<ScoreRow>, usize)> {
    let config = run.scoring_config();
    let echo = run.echo();
    let scoring_name = json!(run.scoring);
    let scored: Vec<(ScoreRow, Option<(u8, String)>)> = run.pool()?.install(|| {
        items
            .par_iter()
            .map(|item| {
                let (mut row, fault) = match backend.score(config, &item.source, &item.candidate, weights) {
                    Ok(s) => {
                        let mut extras = s.extras;
                        extras.insert("scoring".into(), scoring_name.clone());
                        let row = ScoreRow {
                            id: item.id.clone(),
                            score: Some(s.score),
                            per_timestep: s.per_timestep.iter().map(|p| (timestep_key(p.t), p.value)).collect(),
                            config: echo.clone(),
                            error: None,
                            extras,
                        };
                        (row, None)
                    }
                    Err(e) => {
                        let message = format!("{e:#}");
                        let mut row = ScoreRow::failed(&item.id, message.clone());
                        row.config = echo.clone();
                        (row, Some((exit::code_for(&e), message)))
                    }
                };
                row.extras.extend(item.extras.clone());
                (row, fault)
            })
            .collect()
    });
    // unreachable backends and misconfiguration fail the run, not the record
    if let Some((code, message)) = scored
        .iter()
        .filter_map(|(_, f)| f.as_ref())
        .find(|(code, _)| *code == exit::UNAVAILABLE || *code == exit::USAGE)
    {
        return Err(exit::Exit { code: *code, message: message.clone() }.into());
    }
    let failures = scored.iter().filter(|(_, f)| f.is_some()).count();
    let rows = scored.into_iter().map(|(r, _)| r).collect();
    Ok((rows, failures))
}

fn finish(rows: &[ScoreRow], failures: usize, out: &Path) -> anyhow::Result<u8> {
    dataset::write_jsonl(rows, out)?;
    if failures > 0 {
        eprintln!("{failures} of {} records failed; see the error fields in {}", rows.len(), out.display());
        return Ok(exit::RECORD_ERRORS);
    }
    Ok(0)
}

fn segment_items(path: &Path) -> anyhow::Result<Vec<Item>> {
    Ok(load_segments(path)?
        .into_iter()
        .map(|r| Item { id: r.id, source: r.source, candidate: r.candidate, extras: BTreeMap::new() })
        .collect())
}

fn texts(items: &[Item]) -> Vec<&str> {
    items.iter().flat_map(|i| [i.source.as_str(), i.candidate.as_str()]).collect()
}

pub fn score(args: ScoreArgs) -> anyhow::Result<u8> {
    let run = RunConfig::resolve(&args.run, args.scoring, ScoringArg::Cond)?;
    let items = match args.kind {
        KindArg::Segment => segment_items(&args.data)?,
        KindArg::Pairwise => load_pairs(&args.data)?
            .into_iter()
            .flat_map(|p| {
                let side = |name: &str, cand: &str| Item {
                    id: format!("{}/{name}", p.id),
                    source: p.source.clone(),
                    candidate: cand.to_string(),
                    extras: BTreeMap::from([("pair".to_string(), json!(p.id)), ("side".to_string(), json!(name))]),
                };
                [side("better", &p.better), side("worse", &p.worse)]
            })
            .collect(),
    };
    if args.weights.is_some() && run.scoring != ScoringArg::Profile {
        return Err(exit::usage("--weights only applies to profile scoring"));
    }
    let weights = args.weights.as_deref().map(|p| load_weights(p, run.timesteps)).transpose()?;
    let backend = Backend::load(&run, &texts(&items))?;
    let (rows, failures) = score_items(&run, &backend, &items, weights.as_deref())?;
    finish(&rows, failures, &args.out)
}

pub fn profile(args: ProfileArgs) -> anyhow::Result<u8> {
    let run = RunConfig::resolve(&args.run, Some(ScoringArg::Profile), ScoringArg::Profile)?;
    let items = segment_items(&args.data)?;
    let weights = args.weights.as_deref().map(|p| load_weights(p, run.timesteps)).transpose()?;
    let backend = Backend::load(&run, &texts(&items))?;
    let (rows, failures) = score_items(&run, &backend, &items, weights.as_deref())?;
    finish(&rows, failures, &args.out)
}

pub fn pmi(args: PmiArgs) -> anyhow::Result<u8> {
    let run = RunConfig::resolve(&args.run, Some(ScoringArg::Pmi), ScoringArg::Pmi)?;
    if args.variants.is_empty() && (args.report.is_some() || args.tsv.is_some()) {
        return Err(exit::usage("--report and --tsv need at least one --variant"));
    }
    let items = segment_items(&args.data)?;
    let mut variants = Vec::new();
    for spec in &args.variants {
        let (name, path) =
            spec.split_once('=').ok_or_else(|| exit::usage(format!("--variant {spec:?} is not NAME=PATH")))?;
        if name.is_empty() || name == "original" {
            return Err(exit::usage(format!("invalid variant name {name:?}")));
        }
        variants.push((name.to_string(), segment_items(Path::new(path))?));
    }
    let mut all_texts = texts(&items);
    for (_, v) in &variants {
        all_texts.extend(texts(v));
    }
    let backend = Backend::load(&run, &all_texts)?;
    let (rows, failures) = score_items(&run, &backend, &items, None)?;

    if !variants.is_empty() {
        let denoiser = backend.denoiser().ok_or_else(|| exit::usage("variant comparison needs a masked backend"))?;
        let tokenize = |items: &[Item]| -> anyhow::Result<Vec<(TokenSequence, TokenSequence)>> {
            items
                .iter()
                .map(|i| Ok((backend.tokenize(&i.source)?, backend.tokenize(&i.candidate)?)))
                .collect::<anyhow::Result<_>>()
                .map_err(|e| exit::data(format!("variant comparison: {e:#}")))
        };
        let mut sets = vec![("original".to_string(), tokenize(&items)?)];
        for (name, v) in &variants {
            sets.push((name.clone(), tokenize(v)?));
        }
        let named: Vec<(&str, &[(TokenSequence, TokenSequence)])> =
            sets.iter().map(|(n, s)| (n.as_str(), s.as_slice())).collect();
        let rep = run.pool()?.install(|| pmi_adversarial_report(denoiser, &named, &backend.estimator)).map_err(
            |e| match e {
                maskscore::diagnostics::DiagnosticsError::MismatchedSources { .. } => exit::data(e.to_string()),
                other => other.into(),
            },
        )?;
        if let Some(path) = &args.report {
            let body =
                json!({ "variants": rep.variants, "tests": rep.tests, "statistic_scale": "mean log-probability" });
            dataset::write_json(&report(run.echo(), body), path)?;
        }
        if let Some(path) = &args.tsv {
            write_text(path, &rep.to_tsv())?;
        }
    }
    finish(&rows, failures, &args.out)
}
