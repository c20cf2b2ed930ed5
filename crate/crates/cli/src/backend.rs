//! Backend construction and per-record scoring dispatch.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use anyhow::Context;
use maskscore::denoiser::{ModelFile, RemoteConfig, RemoteDenoiser, ToyArLm, ToyMaskedLm, ToyModel, UniformDenoiser};
use maskscore::estimator::TimestepScore;
use maskscore::masking::{load_stopwords, TokenClassifier};
use maskscore::scoring::{
    aggregate_profile, quality_profile, score_ar, score_bidirectional, score_conditional, score_marginal, score_pmi,
    score_reverse, ScoringConfig,
};
use maskscore::text::OovPolicy;
use maskscore::{Denoiser, EstimatorConfig, TokenSequence, Tokenizer, Vocabulary};
use serde_json::{json, Value};

use crate::args::BackendKind;
use crate::exit;
use crate::run::RunConfig;

pub enum Model {
    Masked(ToyMaskedLm),
    Ar(ToyArLm),
    Uniform(UniformDenoiser),
    Remote(RemoteDenoiser),
}

pub struct Backend {
    pub model: Model,
    pub vocab: Vocabulary,
    pub estimator: EstimatorConfig,
    pub oov: OovPolicy,
}

/// Outcome of scoring one record.
pub struct RecordScore {
    pub score: f64,
    pub per_timestep: Vec<TimestepScore>,
    pub extras: BTreeMap<String, Value>,
}

impl Backend {
    /// Loads the configured backend. Backends without a model file build
    /// their vocabulary from `texts`.
    pub fn load(run: &RunConfig, texts: &[&str]) -> anyhow::Result<Self> {
        let file = match &run.model {
            Some(path) => Some(ModelFile::load(path).with_context(|| format!("loading model {}", path.display()))?),
            None => None,
        };
        let fallback_vocab = || {
            Vocabulary::build(texts, Tokenizer::Whitespace)
                .map_err(|e| exit::data(format!("cannot build a vocabulary from the dataset: {e}")))
        };
        let (model, vocab) = match (run.backend, file) {
            (BackendKind::ToyMasked, Some(ModelFile { vocab, model: ToyModel::Masked(m) })) => {
                (Model::Masked(m), vocab)
            }
            (BackendKind::ToyAr, Some(ModelFile { vocab, model: ToyModel::Ar(m) })) => (Model::Ar(m), vocab),
            (BackendKind::ToyMasked | BackendKind::ToyAr, _) => {
                return Err(exit::usage(format!("model file kind does not match backend {:?}", run.backend)))
            }
            (BackendKind::Uniform, file) => {
                let vocab = match file {
                    Some(f) => f.vocab,
                    None => fallback_vocab()?,
                };
                (Model::Uniform(UniformDenoiser::new(vocab.size())), vocab)
            }
            (BackendKind::Remote, file) => {
                let vocab = match file {
                    Some(f) => f.vocab,
                    None => fallback_vocab()?,
                };
                let endpoint = run.endpoint.clone().expect("validated endpoint");
                let cfg = RemoteConfig { timeout: Duration::from_secs_f64(run.timeout), ..RemoteConfig::new(endpoint) };
                let remote = RemoteDenoiser::new(cfg, vocab.clone());
                remote.health().context("remote denoiser health check")?;
                (Model::Remote(remote), vocab)
            }
        };
        let mut estimator = run.estimator();
        if let Some(path) = &run.stopwords {
            let words = load_stopwords(path).with_context(|| format!("reading {}", path.display()))?;
            estimator.classifier = Some(Arc::new(TokenClassifier::new(vocab.clone(), words)));
        }
        let oov = if run.skip_oov { OovPolicy::Skip } else { OovPolicy::Error };
        Ok(Self { model, vocab, estimator, oov })
    }

    pub fn denoiser(&self) -> Option<&dyn Denoiser> {
        match &self.model {
            Model::Masked(m) => Some(m),
            Model::Uniform(m) => Some(m),
            Model::Remote(m) => Some(m),
            Model::Ar(_) => None,
        }
    }

    pub fn ar(&self) -> Option<&ToyArLm> {
        match &self.model {
            Model::Ar(m) => Some(m),
            _ => None,
        }
    }

    pub fn tokenize(&self, text: &str) -> anyhow::Result<TokenSequence> {
        Ok(self.vocab.tokenize(text, self.oov)?)
    }

    /// Scores one candidate under `config`; `weights` aggregates profiles.
    pub fn score(
        &self,
        config: ScoringConfig,
        source: &str,
        candidate: &str,
        weights: Option<&[f64]>,
    ) -> anyhow::Result<RecordScore> {
        let src = self.tokenize(source)?;
        let cand = self.tokenize(candidate)?;
        let cfg = &self.estimator;
        let plain = |r: maskscore::ScoreReport| RecordScore {
            score: r.score,
            per_timestep: r.per_timestep,
            extras: BTreeMap::new(),
        };
        let Some(d) = self.denoiser() else {
            let ar = self.ar().expect("toy AR backend");
            if config == ScoringConfig::Profile {
                return Err(exit::usage("profiles need a masked backend"));
            }
            let score = score_ar(ar, config, &cand, Some(&src), cfg.alpha_bi)?;
            return Ok(RecordScore { score, per_timestep: Vec::new(), extras: BTreeMap::new() });
        };
        Ok(match config {
            ScoringConfig::Mar => plain(score_marginal(d, &cand, cfg)?),
            ScoringConfig::Cond => plain(score_conditional(d, &cand, &src, cfg)?),
            ScoringConfig::Rev => plain(score_reverse(d, &src, &cand, cfg)?),
            ScoringConfig::Bi => plain(score_bidirectional(d, &cand, &src, cfg)?),
            ScoringConfig::Pmi => {
                let r = score_pmi(d, &cand, &src, cfg)?;
                let mut extras = BTreeMap::new();
                extras.insert("conditional".into(), json!(r.conditional));
                extras.insert("marginal".into(), json!(r.marginal));
                RecordScore { score: r.pmi, per_timestep: r.per_timestep, extras }
            }
            ScoringConfig::Profile => {
                let profile = quality_profile(d, &cand, Some(&src), cfg)?;
                let profile = match weights {
                    Some(w) => profile.with_weights(w.to_vec())?,
                    None => profile,
                };
                let per_timestep = profile
                    .grid()
                    .values()
                    .iter()
                    .zip(profile.scores())
                    .map(|(&t, &value)| TimestepScore { t, value, samples: 0 })
                    .collect();
                let mut extras = BTreeMap::new();
                extras.insert("weights".into(), json!(profile.weights()));
                RecordScore { score: aggregate_profile(&profile), per_timestep, extras }
            }
        })
    }
}
