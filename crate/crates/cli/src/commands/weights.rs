use std::collections::HashMap;

use maskscore::dataset;
use maskscore::scoring::{learn_weights, quality_profile, QualityProfile, WeightError, WeightLearningOptions};
use maskscore::TimestepGrid;
use rayon::prelude::*;

use super::load_segments;
use crate::args::{LearnArgs, ScoringArg};
use crate::backend::Backend;
use crate::exit;
use crate::run::RunConfig;

/// Rebuilds profiles from a profile dump; every row must cover the same
/// `T`-point grid.
fn profiles_from_dump(path: &std::path::Path, ids: &[String]) -> anyhow::Result<Vec<QualityProfile>> {
    let rows: HashMap<String, dataset::ScoreRow> =
        dataset::load_scores(path)?.into_iter().map(|r| (r.id.clone(), r)).collect();
    let mut out = Vec::with_capacity(ids.len());
    let mut grid: Option<TimestepGrid> = None;
    for id in ids {
        let row = rows.get(id).ok_or_else(|| exit::data(format!("no profile for record {id:?}")))?;
        let mut points: Vec<(f64, f64)> = row
            .per_timestep
            .iter()
            .map(|(k, v)| k.parse::<f64>().map(|t| (t, *v)))
            .collect::<Result<_, _>>()
            .map_err(|_| exit::data(format!("record {id:?}: bad timestep key")))?;
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let g = TimestepGrid::new(points.len()).map_err(|_| exit::data(format!("record {id:?} has no profile")))?;
        let matches = g.values().iter().zip(&points).all(|(a, b)| (a - b.0).abs() < 1e-12);
        if !matches || grid.as_ref().is_some_and(|first| *first != g) {
            return Err(exit::data(WeightError::GridMismatch(out.len()).to_string()));
        }
        grid.get_or_insert_with(|| g.clone());
        out.push(QualityProfile::uniform(g, points.into_iter().map(|p| p.1).collect())?);
    }
    Ok(out)
}

pub fn run(args: LearnArgs) -> anyhow::Result<u8> {
    let run = RunConfig::resolve(&args.run, Some(ScoringArg::Profile), ScoringArg::Profile)?;
    let records: Vec<_> =
        load_segments(&args.data)?.into_iter().filter(|r| r.human.contains_key(&args.dimension)).collect();
    if records.is_empty() {
        return Err(exit::data(format!("no record has human dimension {:?}", args.dimension)));
    }
    let human: Vec<f64> = records.iter().map(|r| r.human[&args.dimension]).collect();
    let profiles = match &args.profiles {
        Some(path) => profiles_from_dump(path, &records.iter().map(|r| r.id.clone()).collect::<Vec<_>>())?,
        None => {
            let texts: Vec<&str> = records.iter().flat_map(|r| [r.source.as_str(), r.candidate.as_str()]).collect();
            let backend = Backend::load(&run, &texts)?;
            let d = backend.denoiser().ok_or_else(|| exit::usage("profiles need a masked backend"))?;
            run.pool()?
                .install(|| {
                    records
                        .par_iter()
                        .map(|r| -> anyhow::Result<QualityProfile> {
                            let cand = backend.tokenize(&r.candidate)?;
                            let src = backend.tokenize(&r.source)?;
                            Ok(quality_profile(d, &cand, Some(&src), &backend.estimator)?)
                        })
                        .collect::<anyhow::Result<_>>()
                })
                .map_err(|e| exit::data(format!("{e:#}")))?
        }
    };
    let opts =
        WeightLearningOptions { folds: args.folds, restarts: args.restarts, seed: run.seed, ..Default::default() };
    let learned = run.pool()?.install(|| learn_weights(&profiles, &human, &opts)).map_err(|e| match e {
        WeightError::InvalidOptions(_) => exit::usage(e.to_string()),
        other => exit::data(other.to_string()),
    })?;
    dataset::write_json(&learned, &args.out)?;
    Ok(0)
}
