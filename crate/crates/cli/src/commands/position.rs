use std::fmt::Write as _;

use maskscore::dataset;
use maskscore::diagnostics::positional_bias;
use maskscore::per_position_scores;
use rayon::prelude::*;
use serde_json::json;

use super::{float_cell, load_segments, report, write_text};
use crate::args::{PositionArgs, ScoringArg};
use crate::backend::Backend;
use crate::exit;
use crate::run::RunConfig;

pub fn run(args: PositionArgs) -> anyhow::Result<u8> {
    let run = RunConfig::resolve(&args.run, None, if args.conditional { ScoringArg::Cond } else { ScoringArg::Mar })?;
    let records = load_segments(&args.data)?;
    let texts: Vec<&str> = records.iter().flat_map(|r| [r.source.as_str(), r.candidate.as_str()]).collect();
    let backend = Backend::load(&run, &texts)?;
    let scores: Vec<Vec<Option<f64>>> = run.pool()?.install(|| {
        records
            .par_iter()
            .map(|r| -> anyhow::Result<Vec<Option<f64>>> {
                let cand = backend.tokenize(&r.candidate)?;
                let src = backend.tokenize(&r.source)?;
                let context = args.conditional.then_some(&src);
                Ok(match backend.denoiser() {
                    Some(d) => per_position_scores(d, &cand, context, &backend.estimator)?,
                    None => backend
                        .ar()
                        .expect("AR backend")
                        .sequence_logprobs(&cand, context)?
                        .into_iter()
                        .map(Some)
                        .collect(),
                })
                .map_err(|e: anyhow::Error| anyhow::anyhow!("record {}: {e:#}", r.id))
            })
            .collect::<anyhow::Result<_>>()
    })?;
    let rep = positional_bias(&scores, args.max_position).map_err(|e| exit::data(e.to_string()))?;
    if let Some(path) = &args.tsv {
        let mut s = String::from("position\tmean\tstd\tcount\n");
        for (i, ((m, sd), n)) in
            rep.per_position_mean.iter().zip(&rep.per_position_std).zip(&rep.per_position_count).enumerate()
        {
            let _ = writeln!(s, "{i}\t{}\t{}\t{n}", float_cell(*m), float_cell(*sd));
        }
        write_text(path, &s)?;
    }
    let body = json!({ "records": records.len(), "conditional": args.conditional, "positional_bias": rep });
    dataset::write_json(&report(run.echo(), body), &args.out)?;
    Ok(0)
}
