use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use maskscore::dataset::{self, ScoreRow};
use maskscore::stats::{
    correlate, pairwise_accuracy, system_level_aggregate, williams_test, BootstrapSpec, CorrelationReport, Statistic,
};
use serde::Serialize;
use serde_json::json;

use super::{float_cell, human_dims, load_pairs, load_segments, report, write_text};
use crate::args::{KindArg, LevelArg, MetaEvalArgs, StatisticArg};
use crate::exit;

#[derive(Debug, Serialize)]
struct WilliamsEntry {
    compare_value: f64,
    metric_correlation: f64,
    t: f64,
    df: f64,
    p_two_sided: f64,
    p_greater: f64,
    p_less: f64,
}

#[derive(Debug, Serialize)]
struct ResultRow {
    dimension: String,
    level: LevelArg,
    #[serde(flatten)]
    correlation: CorrelationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    williams: Option<WilliamsEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    williams_error: Option<String>,
}

fn statistic(s: StatisticArg) -> Statistic {
    match s {
        StatisticArg::Kendall => Statistic::KendallTauB,
        StatisticArg::Spearman => Statistic::SpearmanRho,
        StatisticArg::Pearson => Statistic::PearsonR,
    }
}

fn score_map(rows: Vec<ScoreRow>) -> HashMap<String, f64> {
    rows.into_iter().filter_map(|r| r.score.filter(|s| s.is_finite()).map(|s| (r.id, s))).collect()
}

fn load_scores(path: &std::path::Path) -> anyhow::Result<HashMap<String, f64>> {
    let rows = dataset::load_scores(path)?;
    if rows.is_empty() {
        return Err(exit::data(format!("{}: score file is empty", path.display())));
    }
    Ok(score_map(rows))
}

/// Matched observations for one dimension: `(system, metric, human, other)`.
type Observation = (Option<String>, f64, f64, Option<f64>);

pub fn run(args: MetaEvalArgs) -> anyhow::Result<u8> {
    if !(args.confidence > 0.0 && args.confidence < 1.0) {
        return Err(exit::usage("--confidence must lie in (0, 1)"));
    }
    let scores = load_scores(&args.scores)?;
    let compare = args.compare.as_deref().map(load_scores).transpose()?;
    let config = json!({
        "scores": args.scores,
        "data": args.data,
        "compare": args.compare,
        "kind": format!("{:?}", args.kind).to_lowercase(),
        "bootstrap": args.bootstrap,
        "confidence": args.confidence,
        "seed": args.seed,
    });

    if args.kind == KindArg::Pairwise {
        let pairs = load_pairs(&args.data)?;
        let mut values = Vec::new();
        let mut labels = Vec::new();
        let mut skipped = 0;
        for p in &pairs {
            match (scores.get(&format!("{}/better", p.id)), scores.get(&format!("{}/worse", p.id))) {
                (Some(&b), Some(&w)) => {
                    labels.push((values.len(), values.len() + 1));
                    values.extend([b, w]);
                }
                _ => skipped += 1,
            }
        }
        let acc = pairwise_accuracy(&values, &labels).map_err(|e| exit::data(e.to_string()))?;
        let body = json!({ "pairwise_accuracy": acc, "pairs": labels.len(), "skipped": skipped });
        dataset::write_json(&report(config, body), &args.out)?;
        if let Some(path) = &args.tsv {
            write_text(path, &format!("statistic\tvalue\tn\npairwise_accuracy\t{acc}\t{}\n", labels.len()))?;
        }
        return Ok(0);
    }

    let records = load_segments(&args.data)?;
    let dims = human_dims(&records);
    if dims.is_empty() {
        return Err(exit::data("dataset has no human judgments"));
    }
    let statistics: Vec<StatisticArg> = if args.statistics.is_empty() {
        vec![StatisticArg::Kendall, StatisticArg::Spearman, StatisticArg::Pearson]
    } else {
        args.statistics.clone()
    };
    let levels = if args.levels.is_empty() { vec![LevelArg::Segment] } else { args.levels.clone() };
    let bootstrap = (args.bootstrap > 0).then_some(BootstrapSpec {
        resamples: args.bootstrap,
        level: args.confidence,
        seed: args.seed,
    });

    let observations = |dim: &str| -> (Vec<Observation>, usize) {
        let mut obs = Vec::new();
        let mut skipped = 0;
        for r in &records {
            let Some(&h) = r.human.get(dim) else { continue };
            match (scores.get(&r.id), compare.as_ref().map(|c| c.get(&r.id))) {
                (Some(&m), None) => obs.push((r.system.clone(), m, h, None)),
                (Some(&m), Some(Some(&o))) => obs.push((r.system.clone(), m, h, Some(o))),
                _ => skipped += 1,
            }
        }
        (obs, skipped)
    };

    let mut results = Vec::new();
    let mut skipped_by_dim = BTreeMap::new();
    for dim in dims.keys() {
        let (obs, skipped) = observations(dim);
        skipped_by_dim.insert(dim.clone(), skipped);
        for &level in &levels {
            let (metric, human, other): (Vec<f64>, Vec<f64>, Vec<f64>) = match level {
                LevelArg::Segment => (
                    obs.iter().map(|o| o.1).collect(),
                    obs.iter().map(|o| o.2).collect(),
                    obs.iter().filter_map(|o| o.3).collect(),
                ),
                LevelArg::System => {
                    if obs.iter().any(|o| o.0.is_none()) {
                        return Err(exit::data(format!("system-level {dim}: some records lack a system id")));
                    }
                    let sys: Vec<(String, f64, f64)> = obs.iter().map(|o| (o.0.clone().unwrap(), o.1, o.2)).collect();
                    let agg = system_level_aggregate(&sys);
                    let other = if compare.is_some() {
                        let sys_o: Vec<(String, f64, f64)> =
                            obs.iter().map(|o| (o.0.clone().unwrap(), o.3.unwrap(), o.2)).collect();
                        system_level_aggregate(&sys_o).into_iter().map(|a| a.metric).collect()
                    } else {
                        Vec::new()
                    };
                    (agg.iter().map(|a| a.metric).collect(), agg.iter().map(|a| a.human).collect(), other)
                }
            };
            for &s in &statistics {
                let stat = statistic(s);
                let correlation = correlate(stat, &metric, &human, bootstrap)
                    .map_err(|e| exit::data(format!("{dim} ({level:?}, {s:?}): {e}")))?;
                let mut williams_error = None;
                let williams = if compare.is_some() {
                    let entry = stat.compute(&other, &human).and_then(|r13| {
                        let r23 = stat.compute(&metric, &other)?;
                        let w = williams_test(correlation.value, r13, r23, metric.len())?;
                        Ok(WilliamsEntry {
                            compare_value: r13,
                            metric_correlation: r23,
                            t: w.t,
                            df: w.df,
                            p_two_sided: w.p_two_sided,
                            p_greater: w.p_greater,
                            p_less: w.p_less,
                        })
                    });
                    entry.map_err(|e| williams_error = Some(e.to_string())).ok()
                } else {
                    None
                };
                results.push(ResultRow { dimension: dim.clone(), level, correlation, williams, williams_error });
            }
        }
    }

    if let Some(path) = &args.tsv {
        let mut s = String::from("dimension\tlevel\tstatistic\tvalue\tn\tci_low\tci_high\tp_value\twilliams_p\n");
        for r in &results {
            let c = &r.correlation;
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.dimension,
                json!(r.level).as_str().unwrap_or_default(),
                json!(c.statistic).as_str().unwrap_or_default(),
                c.value,
                c.n,
                float_cell(c.ci_low),
                float_cell(c.ci_high),
                float_cell(c.p_value),
                float_cell(r.williams.as_ref().map(|w| w.p_two_sided)),
            );
        }
        write_text(path, &s)?;
    }
    let body = json!({ "results": results, "skipped": skipped_by_dim });
    dataset::write_json(&report(config, body), &args.out)?;
    Ok(0)
}
