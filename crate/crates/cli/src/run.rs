//! Resolution of flags, config file and presets into one run configuration.

use std::fs;
use std::path::PathBuf;

use anyhow::Context;
use maskscore::estimator::Pairing;
use maskscore::scoring::ScoringConfig;
use maskscore::{EstimatorConfig, MaskingStrategy, Weighting};
use serde::{Deserialize, Serialize};

use crate::args::{BackendKind, MaskingArg, PairingArg, Preset, RunArgs, ScoringArg, WeightingArg};
use crate::exit;

/// Keys accepted in a `--config` file; names match the flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct FileConfig {
    backend: Option<BackendKind>,
    model: Option<PathBuf>,
    endpoint: Option<String>,
    preset: Option<Preset>,
    scoring: Option<ScoringArg>,
    k: Option<usize>,
    timesteps: Option<usize>,
    weighting: Option<WeightingArg>,
    masking: Option<MaskingArg>,
    alpha: Option<f64>,
    pairing: Option<PairingArg>,
    seed: Option<u64>,
    stopwords: Option<PathBuf>,
    skip_oov: Option<bool>,
    timeout: Option<f64>,
    jobs: Option<usize>,
}

/// Fully resolved settings, echoed into every output.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub backend: BackendKind,
    pub model: Option<PathBuf>,
    pub endpoint: Option<String>,
    pub preset: Option<Preset>,
    pub scoring: ScoringArg,
    pub k: usize,
    pub timesteps: usize,
    pub weighting: WeightingArg,
    pub masking: MaskingArg,
    pub alpha: f64,
    pub pairing: PairingArg,
    pub seed: u64,
    pub stopwords: Option<PathBuf>,
    pub skip_oov: bool,
    pub timeout: f64,
    #[serde(skip)]
    pub jobs: usize,
}

pub fn preset_scoring(p: Preset) -> ScoringArg {
    match p {
        Preset::MtAdequacy | Preset::SumFaithfulness => ScoringArg::Cond,
        Preset::SumCoverage => ScoringArg::Rev,
        Preset::SumFluency => ScoringArg::Mar,
        Preset::SumHolistic | Preset::D2t => ScoringArg::Bi,
    }
}

impl RunConfig {
    /// `default_scoring` applies when neither flag, file nor preset
    /// chooses one; `scoring_flag` is the command's own `--scoring`.
    pub fn resolve(
        args: &RunArgs,
        scoring_flag: Option<ScoringArg>,
        default_scoring: ScoringArg,
    ) -> anyhow::Result<Self> {
        let file = match &args.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str::<FileConfig>(&text)
                    .map_err(|e| exit::usage(format!("{}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };

        let preset = args.preset.or(file.preset);
        let explicit_scoring = scoring_flag.or(file.scoring);
        let explicit_alpha = args.alpha.or(file.alpha);
        let scoring = match preset {
            Some(p) => {
                let forced = preset_scoring(p);
                if let Some(s) = explicit_scoring.filter(|s| *s != forced) {
                    return Err(exit::usage(format!("preset {p:?} uses {forced:?} scoring, conflicting with {s:?}")));
                }
                forced
            }
            None => explicit_scoring.unwrap_or(default_scoring),
        };
        let alpha = match preset {
            Some(p @ (Preset::SumHolistic | Preset::D2t)) => {
                if let Some(a) = explicit_alpha.filter(|a| *a != 0.5) {
                    return Err(exit::usage(format!("preset {p:?} fixes alpha at 0.5, got {a}")));
                }
                0.5
            }
            _ => explicit_alpha.unwrap_or(0.5),
        };

        let cfg = Self {
            backend: args.backend.or(file.backend).unwrap_or(BackendKind::ToyMasked),
            model: args.model.clone().or(file.model),
            endpoint: args.endpoint.clone().or(file.endpoint),
            preset,
            scoring,
            k: args.k.or(file.k).unwrap_or(20),
            timesteps: args.timesteps.or(file.timesteps).unwrap_or(10),
            weighting: args.weighting.or(file.weighting).unwrap_or(WeightingArg::Mlp),
            masking: args.masking.or(file.masking).unwrap_or(MaskingArg::Random),
            alpha,
            pairing: args.pairing.or(file.pairing).unwrap_or(PairingArg::Paired),
            seed: args.seed.or(file.seed).unwrap_or(0),
            stopwords: args.stopwords.clone().or(file.stopwords),
            skip_oov: args.skip_oov || file.skip_oov.unwrap_or(false),
            timeout: args.timeout.or(file.timeout).unwrap_or(30.0),
            jobs: args
                .jobs
                .or(file.jobs)
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> anyhow::Result<()> {
        match self.backend {
            BackendKind::Remote if self.endpoint.is_none() => {
                return Err(exit::usage("the remote backend needs --endpoint"))
            }
            BackendKind::ToyMasked | BackendKind::ToyAr if self.model.is_none() => {
                return Err(exit::usage("toy backends need --model"))
            }
            _ => {}
        }
        if self.endpoint.is_some() && self.backend != BackendKind::Remote {
            return Err(exit::usage("--endpoint only applies to the remote backend"));
        }
        if self.k == 0 || self.timesteps == 0 {
            return Err(exit::usage("--k and --timesteps must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(exit::usage(format!("--alpha {} outside [0, 1]", self.alpha)));
        }
        if self.masking != MaskingArg::Random && self.stopwords.is_none() {
            return Err(exit::usage("content and entity masking need --stopwords"));
        }
        if !(self.timeout > 0.0 && self.timeout.is_finite()) {
            return Err(exit::usage("--timeout must be positive"));
        }
        if self.jobs == 0 {
            return Err(exit::usage("--jobs must be at least 1"));
        }
        Ok(())
    }

    pub fn scoring_config(&self) -> ScoringConfig {
        match self.scoring {
            ScoringArg::Mar => ScoringConfig::Mar,
            ScoringArg::Cond => ScoringConfig::Cond,
            ScoringArg::Rev => ScoringConfig::Rev,
            ScoringArg::Bi => ScoringConfig::Bi,
            ScoringArg::Pmi => ScoringConfig::Pmi,
            ScoringArg::Profile => ScoringConfig::Profile,
        }
    }

    /// Estimator settings without the token classifier, which needs the
    /// backend vocabulary.
    pub fn estimator(&self) -> EstimatorConfig {
        EstimatorConfig {
            samples: self.k,
            timesteps: self.timesteps,
            weighting: match self.weighting {
                WeightingArg::Mlp => Weighting::Mlp,
                WeightingArg::Elbo => Weighting::Elbo,
            },
            strategy: match self.masking {
                MaskingArg::Random => MaskingStrategy::Random,
                MaskingArg::Content => MaskingStrategy::Content,
                MaskingArg::Entity => MaskingStrategy::Entity,
            },
            alpha_bi: self.alpha,
            bi_pairing: match self.pairing {
                PairingArg::Paired => Pairing::Paired,
                PairingArg::Independent => Pairing::Independent,
            },
            seed: self.seed,
            classifier: None,
        }
    }

    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn pool(&self) -> anyhow::Result<rayon::ThreadPool> {
        Ok(rayon::ThreadPoolBuilder::new().num_threads(self.jobs).build()?)
    }
}
