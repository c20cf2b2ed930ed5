//! Acceptance suite. Runs without the libtest harness and prints one
//! PASS/FAIL line per criterion; the process fails if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use maskscore::denoiser::{MaskedLmParams, SentinelPolicy, ToyArLm, ToyMaskedLm, UniformDenoiser};
use maskscore::diagnostics::{
    directional_consistency, fictional_entities, generate_reversal_pairs, make_disfluent_relevant,
    make_fluent_irrelevant, pmi_adversarial_report, positional_bias, PerturbationConfig, DEFAULT_RELATIONS,
};
use maskscore::rng::{derive_seed, rng_from};
use maskscore::scoring::{
    aggregate_profile, learn_weights, quality_profile, score_bidirectional, score_conditional, score_marginal,
    score_pmi, score_reverse, QualityProfile, WeightLearningOptions,
};
use maskscore::stats::{
    average_ranks, bootstrap_ci, kendall_tau, mann_whitney_u, spearman_rho, williams_test, Statistic,
};
use maskscore::text::OovPolicy;
use maskscore::{
    estimate, exact_estimate, per_position_scores, EstimatorConfig, TimestepGrid, TokenSequence, Tokenizer, Vocabulary,
    Weighting,
};
use rand::Rng;
use rand_distr::{Distribution, Normal};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn seq(ids: &[u32]) -> TokenSequence {
    TokenSequence::new(ids.to_vec())
}

fn cfg(samples: usize, timesteps: usize, weighting: Weighting, seed: u64) -> EstimatorConfig {
    EstimatorConfig { samples, timesteps, weighting, seed, ..Default::default() }
}

/// Random walks on a cycle of `v` tokens, used as a generic training corpus.
fn walk_corpus(v: u32, count: usize, len: usize, seed: u64) -> Vec<TokenSequence> {
    let mut rng = rng_from(seed);
    (0..count)
        .map(|_| {
            let mut x = rng.random_range(0..v);
            let mut out = vec![x];
            for _ in 1..len {
                x = if rng.random_bool(0.5) { (x + 1) % v } else { (x + v - 1) % v };
                out.push(x);
            }
            seq(&out)
        })
        .collect()
}

fn random_seq(rng: &mut impl Rng, v: u32, lens: std::ops::RangeInclusive<usize>) -> TokenSequence {
    let len = rng.random_range(lens);
    seq(&(0..len).map(|_| rng.random_range(0..v)).collect::<Vec<_>>())
}

fn estimator_oracle() -> Outcome {
    let start = Instant::now();
    let model = ToyMaskedLm::train(&walk_corpus(7, 300, 8, 1), 8, MaskedLmParams::default()).unwrap();
    let mut rng = rng_from(11);
    let k = 20_000;
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for case in 0..50 {
        let cand = random_seq(&mut rng, 7, 1..=8);
        let src = random_seq(&mut rng, 7, 0..=3);
        let source = (!src.is_empty()).then_some(&src);
        let t = if case % 2 == 0 { 1 } else { 4 };
        for weighting in [Weighting::Mlp, Weighting::Elbo] {
            let mc = estimate(&model, &cand, source, &cfg(k, t, weighting, case)).unwrap();
            let exact = exact_estimate(&model, &cand, source, &TimestepGrid::new(t).unwrap(), weighting).unwrap();
            let bound = 3.0 * mc.sample_std / (k as f64).sqrt();
            let err = (mc.score - exact.score).abs();
            worst = worst.max(if bound > 0.0 {
                err / bound
            } else if err == 0.0 {
                0.0
            } else {
                f64::INFINITY
            });
            if err > bound {
                failures.push(format!("case {case} {weighting:?}: |err| {err:.3e} > {bound:.3e}"));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!("100 estimates, worst error/bound {worst:.3}, {secs:.1}s");
    if secs >= 60.0 {
        failures.push(format!("runtime {secs:.1}s"));
    }
    check(failures.is_empty(), if failures.is_empty() { detail } else { format!("{detail}; {}", failures.join("; ")) })
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn convergence_slope() -> Outcome {
    let model = ToyMaskedLm::train(&walk_corpus(7, 300, 8, 2), 8, MaskedLmParams::default()).unwrap();
    let cand = seq(&[0, 1, 2, 1, 0, 6]);
    let exact = exact_estimate(&model, &cand, None, &TimestepGrid::new(4).unwrap(), Weighting::Mlp).unwrap().score;
    let replicates = 200;
    let ks = [10usize, 100, 1000, 10_000];
    let mut log_k = Vec::new();
    let mut log_err = Vec::new();
    let mut rms_all = Vec::new();
    for &k in &ks {
        let sq: f64 = (0..replicates)
            .map(|r| {
                let s =
                    estimate(&model, &cand, None, &cfg(k, 4, Weighting::Mlp, derive_seed(k as u64, r))).unwrap().score;
                (s - exact).powi(2)
            })
            .sum();
        let rms = (sq / replicates as f64).sqrt();
        rms_all.push(rms);
        log_k.push((k as f64).ln());
        log_err.push(rms.ln());
    }
    let slope = least_squares_slope(&log_k, &log_err);
    let detail = format!(
        "slope {slope:.3} over K={ks:?}, rms errors {}",
        rms_all.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(", ")
    );
    check((slope + 0.5).abs() <= 0.15, detail)
}

fn uniform_fixed_point() -> Outcome {
    let mut rng = rng_from(3);
    let mut mismatches = Vec::new();
    for i in 0..100u64 {
        let v: usize = rng.random_range(2..=60);
        let d = UniformDenoiser::new(v);
        let expected = -(v as f64).ln();
        let cand = random_seq(&mut rng, v as u32, 1..=10);
        let src = random_seq(&mut rng, v as u32, 1..=10);
        let t = rng.random_range(1..=6);
        let c = cfg(rng.random_range(t..=30), t, Weighting::Mlp, i);
        let mut scores = BTreeMap::new();
        let reports = [
            ("mar", score_marginal(&d, &cand, &c).unwrap()),
            ("cond", score_conditional(&d, &cand, &src, &c).unwrap()),
            ("rev", score_reverse(&d, &src, &cand, &c).unwrap()),
            ("bi", score_bidirectional(&d, &cand, &src, &c).unwrap()),
        ];
        for (name, r) in &reports {
            scores.insert(*name, r.score);
            for p in &r.per_timestep {
                if p.value != expected {
                    mismatches.push(format!("input {i} {name} t={}: {}", p.t, p.value));
                }
            }
        }
        let profile = quality_profile(&d, &cand, Some(&src), &c).unwrap();
        let mut w: Vec<f64> = (0..t).map(|_| rng.random::<f64>()).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        let weighted = QualityProfile::new(profile.grid().clone(), profile.scores().to_vec(), w).unwrap();
        scores.insert("profile", aggregate_profile(&profile));
        scores.insert("profile-weighted", aggregate_profile(&weighted));
        for (name, s) in &scores {
            if *s != expected {
                mismatches.push(format!("input {i} {name}: {s} != {expected}"));
            }
        }
        let pmi = score_pmi(&d, &cand, &src, &c).unwrap();
        if pmi.pmi != 0.0 || pmi.per_timestep.iter().any(|p| p.value != 0.0) {
            mismatches.push(format!("input {i} pmi: {}", pmi.pmi));
        }
    }
    let detail = format!("100 inputs x 7 configurations, {} mismatches", mismatches.len());
    check(mismatches.is_empty(), if mismatches.is_empty() { detail } else { format!("{detail}: {}", mismatches[0]) })
}

fn boundary_behavior() -> Outcome {
    let corpus = walk_corpus(9, 200, 7, 4);
    let mut problems = Vec::new();
    for policy in [SentinelPolicy::Barrier, SentinelPolicy::Bridge] {
        let model = ToyMaskedLm::train(&corpus, 10, MaskedLmParams { policy, ..Default::default() }).unwrap();
        let mut rng = rng_from(5);
        for i in 0..50u64 {
            let cand = random_seq(&mut rng, 9, 1..=9);
            let src = random_seq(&mut rng, 9, 1..=5);
            for weighting in [Weighting::Mlp, Weighting::Elbo] {
                let base = score_conditional(&model, &cand, &src, &cfg(16, 1, weighting, 0)).unwrap().score;
                let base_mar = score_marginal(&model, &cand, &cfg(16, 1, weighting, 0)).unwrap().score;
                for seed in 1..6 {
                    let c = cfg(16, 1, weighting, derive_seed(i, seed));
                    let s = score_conditional(&model, &cand, &src, &c).unwrap().score;
                    let m = score_marginal(&model, &cand, &c).unwrap().score;
                    if s != base || m != base_mar {
                        problems.push(format!("{policy:?} input {i}: t=1 score varies with seed"));
                    }
                }
                let c = cfg(12, 5, weighting, i);
                let cond = score_conditional(&model, &cand, &TokenSequence::default(), &c).unwrap();
                let mar = score_marginal(&model, &cand, &c).unwrap();
                if cond.score.to_bits() != mar.score.to_bits() || cond.per_timestep != mar.per_timestep {
                    problems.push(format!("{policy:?} input {i}: empty-source conditional differs from marginal"));
                }
            }
        }
    }
    let detail = format!("2 policies x 50 inputs x 2 weightings, {} violations", problems.len());
    check(problems.is_empty(), if problems.is_empty() { detail } else { format!("{detail}: {}", problems[0]) })
}

fn positional_fairness() -> Outcome {
    let start = Instant::now();
    let v = 10;
    let corpus = walk_corpus(v, 2000, 12, 6);
    let masked = ToyMaskedLm::train(&corpus, v as usize, MaskedLmParams::default()).unwrap();
    let ar = ToyArLm::train(&corpus, v as usize, 1.0).unwrap();
    let ar_scores: Vec<Vec<Option<f64>>> =
        corpus.iter().map(|s| ar.sequence_logprobs(s, None).unwrap().into_iter().map(Some).collect()).collect();
    let masked_scores: Vec<Vec<Option<f64>>> = corpus
        .iter()
        .enumerate()
        .map(|(i, s)| per_position_scores(&masked, s, None, &cfg(20, 10, Weighting::Mlp, i as u64)).unwrap())
        .collect();
    let ar_rep = positional_bias(&ar_scores, 12).unwrap();
    let masked_rep = positional_bias(&masked_scores, 12).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let detail = format!(
        "CoV AR {:.4} vs masked {:.4}; mean positional std AR {:.4} vs masked {:.4}; {secs:.1}s",
        ar_rep.cov, masked_rep.cov, ar_rep.mean_positional_std, masked_rep.mean_positional_std
    );
    check(ar_rep.cov > masked_rep.cov && secs < 300.0, detail)
}

/// Facts are generated over a shared entity pool. Both voices of the first
/// 400 facts train the models; the remaining 200 are scored in both voices,
/// so neither direction of a test fact has been seen.
fn directional_consistency_direction() -> Outcome {
    let (people, works) = fictional_entities(40, 7);
    let all = generate_reversal_pairs(&DEFAULT_RELATIONS, &people, &works, 600, 8).unwrap();
    let (train, pairs) = all.split_at(400);
    let texts: Vec<&str> = all.iter().flat_map(|p| [p.forward.as_str(), p.reverse.as_str()]).collect();
    let vocab = Vocabulary::build(&texts, Tokenizer::Whitespace).unwrap();
    let tok = |s: &str| vocab.tokenize(s, OovPolicy::Error).unwrap();
    let corpus: Vec<TokenSequence> = train.iter().flat_map(|p| [tok(&p.forward), tok(&p.reverse)]).collect();
    let masked = ToyMaskedLm::train(&corpus, vocab.size(), MaskedLmParams::default()).unwrap();
    let ar = ToyArLm::train(&corpus, vocab.size(), 1.0).unwrap();
    let mut m = Vec::new();
    let mut a = Vec::new();
    for (i, p) in pairs.iter().enumerate() {
        let (f, r) = (tok(&p.forward), tok(&p.reverse));
        // Rank correlation needs per-pair noise well below the spread between pairs.
        let c = cfg(2000, 10, Weighting::Mlp, i as u64);
        m.push((score_marginal(&masked, &f, &c).unwrap().score, score_marginal(&masked, &r, &c).unwrap().score));
        a.push((ar.mean_logprob(&f, None).unwrap(), ar.mean_logprob(&r, None).unwrap()));
    }
    let mr = directional_consistency(&m).unwrap();
    let arr = directional_consistency(&a).unwrap();
    let detail = format!(
        "{} pairs; consistency masked {:.4} vs AR {:.4}; rank correlation masked {:.4} vs AR {:.4}",
        pairs.len(),
        mr.mean_consistency,
        arr.mean_consistency,
        mr.rank_correlation,
        arr.rank_correlation
    );
    let ge = mr.mean_consistency >= arr.mean_consistency && mr.rank_correlation >= arr.rank_correlation;
    let strict = mr.mean_consistency > arr.mean_consistency || mr.rank_correlation > arr.rank_correlation;
    check(ge && strict, detail)
}

fn pmi_signature() -> Outcome {
    let topics = 10usize;
    let per_topic = 8u32;
    let mut rng = rng_from(9);
    let mut records = Vec::new();
    let name = |k: usize, j: u32| format!("w{k}_{j}");
    for i in 0..120 {
        let k = i % topics;
        let mut x = rng.random_range(0..per_topic);
        let mut walk = Vec::new();
        for _ in 0..12 {
            walk.push(name(k, x));
            x = if rng.random_bool(0.5) { (x + 1) % per_topic } else { (x + per_topic - 1) % per_topic };
        }
        let source = format!("topic{k} {}", walk[..4].join(" "));
        let candidate = walk[4..].join(" ");
        records.push((source, candidate));
    }
    let fi = make_fluent_irrelevant(&records, 10).unwrap();
    let dr = make_disfluent_relevant(&records, &PerturbationConfig { seed: 11, ..Default::default() }).unwrap();
    let corpus_text: Vec<String> = records.iter().map(|(s, c)| format!("{s} {c}")).collect();
    let vocab = Vocabulary::build(&corpus_text, Tokenizer::Whitespace).unwrap();
    let tok = |s: &str| vocab.tokenize(s, OovPolicy::Error).unwrap();
    let corpus: Vec<TokenSequence> = corpus_text.iter().map(|s| tok(s)).collect();
    let params = MaskedLmParams { policy: SentinelPolicy::Bridge, ..Default::default() };
    let model = ToyMaskedLm::train(&corpus, vocab.size(), params).unwrap();
    let to_ids = |rs: &[(String, String)]| -> Vec<(TokenSequence, TokenSequence)> {
        rs.iter().map(|(s, c)| (tok(s), tok(c))).collect()
    };
    let (orig, fi, dr) = (to_ids(&records), to_ids(&fi), to_ids(&dr));
    let report = pmi_adversarial_report(
        &model,
        &[("original", &orig), ("fluent-irrelevant", &fi), ("disfluent-relevant", &dr)],
        &cfg(20, 10, Weighting::Mlp, 12),
    )
    .unwrap();
    let o = report.variant("original").unwrap();
    let f = report.variant("fluent-irrelevant").unwrap();
    let d = report.variant("disfluent-relevant").unwrap();
    let p_fi = report.test("original", "fluent-irrelevant", "pmi").unwrap().p_value;
    let p_dr = report.test("original", "disfluent-relevant", "marginal").unwrap().p_value;
    let retained = d.pmi.mean / o.pmi.mean;
    let detail = format!(
        "PMI original {:.4}, fluent-irrelevant {:.4} (p={p_fi:.2e}); marginal original {:.4}, disfluent-relevant {:.4} (p={p_dr:.2e}); disfluent PMI retains {:.0}%",
        o.pmi.mean,
        f.pmi.mean,
        o.marginal.mean,
        d.marginal.mean,
        100.0 * retained
    );
    let ok = f.pmi.mean < o.pmi.mean
        && p_fi < 0.01
        && d.marginal.mean < o.marginal.mean
        && p_dr < 0.01
        && o.pmi.mean > 0.0
        && retained >= 0.5;
    check(ok, detail)
}

fn brute_kendall(x: &[f64], y: &[f64]) -> f64 {
    let sign = |a: f64, b: f64| (a > b) as i64 - (a < b) as i64;
    let (mut num, mut dx, mut dy) = (0i64, 0i64, 0i64);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let (sx, sy) = (sign(x[i], x[j]), sign(y[i], y[j]));
            num += sx * sy;
            dx += sx * sx;
            dy += sy * sy;
        }
    }
    num as f64 / ((dx as f64) * (dy as f64)).sqrt()
}

fn oracle_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|v| {
            let below = x.iter().filter(|w| *w < v).count() as f64;
            let equal = x.iter().filter(|w| *w == v).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

fn textbook_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

fn statistics_suite() -> Outcome {
    let mut rng = rng_from(13);
    let mut problems = Vec::new();
    let (mut kendall_checked, mut spearman_checked) = (0, 0);
    for i in 0..1000 {
        let n = rng.random_range(2..=8);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0..5) as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(0..5) as f64).collect();
        if let Ok(t) = kendall_tau(&x, &y) {
            kendall_checked += 1;
            if t.to_bits() != brute_kendall(&x, &y).to_bits() {
                problems.push(format!("kendall input {i}: {t} vs {}", brute_kendall(&x, &y)));
            }
        }
        if let Ok(rho) = spearman_rho(&x, &y) {
            spearman_checked += 1;
            let oracle = textbook_pearson(&oracle_ranks(&x), &oracle_ranks(&y));
            if (rho - oracle).abs() > 1e-12 || average_ranks(&x) != oracle_ranks(&x) {
                problems.push(format!("spearman input {i}: {rho} vs {oracle}"));
            }
        }
        let a: Vec<f64> = (0..rng.random_range(1..=15)).map(|_| rng.random_range(0..6) as f64).collect();
        let b: Vec<f64> = (0..rng.random_range(1..=15)).map(|_| rng.random_range(0..6) as f64).collect();
        let (uab, uba) = (mann_whitney_u(&a, &b).unwrap().u, mann_whitney_u(&b, &a).unwrap().u);
        if uab + uba != (a.len() * b.len()) as f64 {
            problems.push(format!("mann-whitney input {i}: {uab} + {uba} != {}", a.len() * b.len()));
        }
    }
    for i in 0..200 {
        let r = rng.random_range(-0.95..0.95);
        let r23 = rng.random_range(-0.95..0.95);
        let n = rng.random_range(4..200);
        if let Ok(w) = williams_test(r, r, r23, n) {
            if w.t != 0.0 || w.p_two_sided != 1.0 {
                problems.push(format!("williams input {i}: t={} p={}", w.t, w.p_two_sided));
            }
        }
    }
    let normal = Normal::new(0.0, 1.0).unwrap();
    let stats = [Statistic::KendallTauB, Statistic::SpearmanRho, Statistic::PearsonR];
    for i in 0..100 {
        let n = rng.random_range(10..40);
        let x: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
        let pairs: Vec<(f64, f64)> = x.iter().map(|&v| (v, 0.6 * v + normal.sample(&mut rng))).collect();
        let stat = stats[i % 3];
        let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
        let point = stat.compute(&xs, &ys).unwrap();
        let ci = bootstrap_ci(&pairs, stat, 500, 0.95, i as u64).unwrap();
        if !(ci.low <= point && point <= ci.high) {
            problems.push(format!("bootstrap dataset {i}: {point} outside [{}, {}]", ci.low, ci.high));
        }
    }
    let detail = format!(
        "kendall {kendall_checked}, spearman {spearman_checked}, mann-whitney 1000, williams 200, bootstrap 100 checked; {} violations",
        problems.len()
    );
    check(problems.is_empty(), if problems.is_empty() { detail } else { format!("{detail}: {}", problems[0]) })
}

fn weight_recovery() -> Outcome {
    let grid = TimestepGrid::new(5).unwrap();
    let mut learned = Vec::new();
    let mut ok = true;
    for j in 0..5 {
        let mut rng = rng_from(100 + j as u64);
        let n = 100;
        let profiles: Vec<QualityProfile> = (0..n)
            .map(|_| {
                QualityProfile::uniform(grid.clone(), (0..5).map(|_| rng.random_range(-4.0..-1.0)).collect()).unwrap()
            })
            .collect();
        let planted: Vec<f64> = profiles.iter().map(|p| p.scores()[j]).collect();
        let range = planted.iter().cloned().fold(f64::MIN, f64::max) - planted.iter().cloned().fold(f64::MAX, f64::min);
        let noise = Normal::new(0.0, 0.01 * range).unwrap();
        let human: Vec<f64> = planted.iter().map(|s| s + noise.sample(&mut rng)).collect();
        let opts = WeightLearningOptions { folds: 5, seed: j as u64, ..Default::default() };
        let w = learn_weights(&profiles, &human, &opts).unwrap();
        ok &= w.weights[j] >= 0.9;
        learned.push(w.weights[j]);
    }
    check(ok, format!("planted weight learned per grid point: {learned:.3?}"))
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_maskscore")).args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr).trim()))
    }
}

fn pipeline(dir: &Path, data: &Path, corpus: &Path, jobs: &str) -> Result<Vec<Vec<u8>>, String> {
    let p = |name: &str| dir.join(name).to_str().unwrap().to_string();
    let (model, scores, report) = (p("model.bin"), p("scores.jsonl"), p("meta.json"));
    let (data, corpus) = (data.to_str().unwrap(), corpus.to_str().unwrap());
    run_cli(&["train-toy", "--corpus", corpus, "--data", data, "--seed", "3", "--out", &model])?;
    run_cli(&[
        "score",
        "--model",
        &model,
        "--data",
        data,
        "--scoring",
        "bi",
        "--k",
        "40",
        "--seed",
        "5",
        "--jobs",
        jobs,
        "--out",
        &scores,
    ])?;
    run_cli(&[
        "meta-eval",
        "--scores",
        &scores,
        "--data",
        data,
        "--level",
        "segment",
        "--level",
        "system",
        "--seed",
        "7",
        "--out",
        &report,
    ])?;
    [model, scores, report].iter().map(|f| fs::read(f).map_err(|e| e.to_string())).collect()
}

fn determinism() -> Outcome {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut runs = Vec::new();
    for jobs in ["1", "1", "8", "8"] {
        runs.push(pipeline(dir.path(), &root.join("demo.jsonl"), &root.join("corpus.txt"), jobs)?);
    }
    let identical = runs.iter().all(|r| *r == runs[0]);
    let bytes: usize = runs[0].iter().map(Vec::len).sum();
    check(identical, format!("4 runs (jobs 1, 1, 8, 8), {bytes} output bytes each, identical: {identical}"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("estimator matches exact expectation", estimator_oracle),
        ("Monte-Carlo convergence slope", convergence_slope),
        ("uniform fixed point", uniform_fixed_point),
        ("boundary behavior", boundary_behavior),
        ("positional fairness direction", positional_fairness),
        ("directional consistency direction", directional_consistency_direction),
        ("PMI adversarial signature", pmi_signature),
        ("statistics suite", statistics_suite),
        ("weight learning recovers planted signal", weight_recovery),
        ("pipeline determinism", determinism),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != i + 1) {
            continue;
        }
        match f() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
