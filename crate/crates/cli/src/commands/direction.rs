use std::fmt::Write as _;
use std::path::Path;

use maskscore::dataset::{self, read_jsonl};
use maskscore::diagnostics::{directional_consistency, fictional_entities, generate_reversal_pairs, DEFAULT_RELATIONS};
use maskscore::scoring::{score_ar, score_marginal, ScoringConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{report, write_text};
use crate::args::{DirectionArgs, ScoringArg};
use crate::backend::Backend;
use crate::exit;
use crate::run::RunConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PairLine {
    id: String,
    forward: String,
    reverse: String,
}

fn read_pairs(path: &Path) -> anyhow::Result<Vec<PairLine>> {
    let file = std::fs::File::open(path).map_err(|e| exit::data(format!("{}: {e}", path.display())))?;
    let rows: Vec<(usize, PairLine)> = read_jsonl(std::io::BufReader::new(file))?;
    Ok(rows.into_iter().map(|(_, p)| p).collect())
}

pub fn run(args: DirectionArgs) -> anyhow::Result<u8> {
    let run = RunConfig::resolve(&args.run, None, ScoringArg::Mar)?;
    let pairs = match (&args.pairs, args.generate) {
        (Some(path), _) => read_pairs(path)?,
        (None, Some(n)) => {
            let (people, works) = fictional_entities(n.max(1), run.seed);
            generate_reversal_pairs(&DEFAULT_RELATIONS, &people, &works, n, run.seed)
                .map_err(|e| exit::usage(e.to_string()))?
                .into_iter()
                .enumerate()
                .map(|(i, p)| PairLine { id: format!("pair-{i:04}"), forward: p.forward, reverse: p.reverse })
                .collect()
        }
        (None, None) => unreachable!("clap requires one of --pairs and --generate"),
    };
    if pairs.len() < 2 {
        return Err(exit::data(format!("{} pairs; at least 2 are needed", pairs.len())));
    }
    if let Some(path) = &args.write_pairs {
        dataset::write_jsonl(&pairs, path)?;
    }
    let texts: Vec<&str> = pairs.iter().flat_map(|p| [p.forward.as_str(), p.reverse.as_str()]).collect();
    let backend = Backend::load(&run, &texts)?;
    let score = |text: &str| -> anyhow::Result<f64> {
        let seq = backend.tokenize(text)?;
        Ok(match backend.denoiser() {
            Some(d) => score_marginal(d, &seq, &backend.estimator)?.score,
            None => score_ar(backend.ar().expect("AR backend"), ScoringConfig::Mar, &seq, None, 0.5)?,
        })
    };
    let scores: Vec<(f64, f64)> = run.pool()?.install(|| {
        pairs
            .par_iter()
            .map(|p| {
                Ok((score(&p.forward)?, score(&p.reverse)?))
                    .map_err(|e: anyhow::Error| exit::data(format!("pair {}: {e:#}", p.id)))
            })
            .collect::<anyhow::Result<_>>()
    })?;
    let rep = directional_consistency(&scores).map_err(|e| exit::data(e.to_string()))?;
    if let Some(path) = &args.tsv {
        let mut s = String::from("id\tforward\treverse\tconsistency\n");
        for ((p, (f, r)), c) in pairs.iter().zip(&scores).zip(&rep.consistency) {
            let _ = writeln!(s, "{}\t{f}\t{r}\t{c}", p.id);
        }
        write_text(path, &s)?;
    }
    let body = json!({
        "mean_consistency": rep.mean_consistency,
        "std_consistency": rep.std_consistency,
        "rank_correlation": rep.rank_correlation_defined.then_some(rep.rank_correlation),
        "rank_correlation_defined": rep.rank_correlation_defined,
        "rank_statistic": "spearman",
        "consistency_scale": rep.scale,
        "pair_count": rep.pair_count,
        "pairs": pairs.iter().zip(&scores).zip(&rep.consistency).map(|((p, (f, r)), c)| json!({
            "id": p.id, "forward": f, "reverse": r, "consistency": c,
        })).collect::<Vec<_>>(),
    });
    dataset::write_json(&report(run.echo(), body), &args.out)?;
    Ok(0)
}
