use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "maskscore", version, about = "Masked-reconstruction text quality scoring")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every record of a dataset and write a JSON-lines score dump.
    Score(ScoreArgs),
    /// Write per-timestep quality profiles and their weighted aggregate.
    Profile(ProfileArgs),
    /// Split the conditional score into marginal and PMI terms, optionally
    /// comparing adversarial variants of the dataset.
    Pmi(PmiArgs),
    /// Measure how per-token scores depend on sequence position.
    DiagnosePosition(PositionArgs),
    /// Compare scores of forward and reversed statements of the same fact.
    DiagnoseDirection(DirectionArgs),
    /// Build an adversarial variant of a dataset.
    Adversarial(AdversarialArgs),
    /// Correlate metric scores with human judgments.
    MetaEval(MetaEvalArgs),
    /// Train a toy n-gram model and write it to a model file.
    TrainToy(TrainArgs),
    /// Learn timestep aggregation weights by cross-validation.
    LearnWeights(LearnArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    ToyMasked,
    ToyAr,
    Uniform,
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Conditional score with the reference as the source.
    MtAdequacy,
    /// Conditional score.
    SumFaithfulness,
    /// Reverse score.
    SumCoverage,
    /// Marginal score.
    SumFluency,
    /// Bidirectional score with alpha 0.5.
    SumHolistic,
    /// Bidirectional score with alpha 0.5.
    D2t,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoringArg {
    Mar,
    Cond,
    Rev,
    Bi,
    Pmi,
    Profile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightingArg {
    Mlp,
    Elbo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskingArg {
    Random,
    Content,
    Entity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairingArg {
    Paired,
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindArg {
    Segment,
    Pairwise,
}

/// Backend and estimator settings. Flags override values from `--config`,
/// which override the built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Scoring backend [default: toy-masked]
    #[arg(long, value_enum)]
    pub backend: Option<BackendKind>,
    /// Model file written by train-toy (required for toy backends; supplies
    /// the vocabulary for the uniform backend when given)
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Base URL of a remote denoiser (required for the remote backend)
    #[arg(long)]
    pub endpoint: Option<String>,
    /// JSON file with default values for any of these flags
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Named dimension preset; fixes the scoring configuration
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Monte-Carlo samples per score [default: 20]
    #[arg(long)]
    pub k: Option<usize>,
    /// Number of grid timesteps [default: 10]
    #[arg(long)]
    pub timesteps: Option<usize>,
    /// Sample weighting [default: mlp]
    #[arg(long, value_enum)]
    pub weighting: Option<WeightingArg>,
    /// Masking strategy; content and entity need --stopwords [default: random]
    #[arg(long, value_enum)]
    pub masking: Option<MaskingArg>,
    /// Weight of the conditional term in the bidirectional score [default: 0.5]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Whether bidirectional terms share masking seeds [default: paired]
    #[arg(long, value_enum)]
    pub pairing: Option<PairingArg>,
    /// Base random seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Stopword list, one word per line, for content and entity masking
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    /// Drop out-of-vocabulary tokens instead of failing the record
    #[arg(long)]
    pub skip_oov: bool,
    /// Remote request timeout in seconds [default: 30]
    #[arg(long)]
    pub timeout: Option<f64>,
    /// Worker threads for record-level parallelism [default: all cores]
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Input dataset (JSON lines)
    #[arg(long)]
    pub data: PathBuf,
    /// Dataset kind; pairwise records are scored on both sides
    #[arg(long, value_enum, default_value = "segment")]
    pub kind: KindArg,
    /// Scoring configuration [default: cond]
    #[arg(long, value_enum)]
    pub scoring: Option<ScoringArg>,
    /// Learned weights for profile aggregation (default: uniform)
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Output score dump (JSON lines)
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Input dataset (JSON lines)
    #[arg(long)]
    pub data: PathBuf,
    /// Learned weights for aggregation (default: uniform)
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Output profile dump (JSON lines)
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PmiArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Original dataset (JSON lines)
    #[arg(long)]
    pub data: PathBuf,
    /// Adversarial variant as NAME=PATH; repeatable
    #[arg(long = "variant", value_name = "NAME=PATH")]
    pub variants: Vec<String>,
    /// Per-record PMI dump of the original dataset (JSON lines)
    #[arg(long)]
    pub out: PathBuf,
    /// Variant comparison report (JSON); requires --variant
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Variant comparison as TSV; requires --variant
    #[arg(long)]
    pub tsv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PositionArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Input dataset (JSON lines); candidates are analyzed
    #[arg(long)]
    pub data: PathBuf,
    /// Condition on the source instead of scoring candidates alone
    #[arg(long)]
    pub conditional: bool,
    /// Positions beyond this are ignored
    #[arg(long, default_value_t = 64)]
    pub max_position: usize,
    /// Report (JSON)
    #[arg(long)]
    pub out: PathBuf,
    /// Per-position table as TSV
    #[arg(long)]
    pub tsv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DirectionArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Pairs file: JSON lines with "id", "forward" and "reverse"
    #[arg(long, conflicts_with = "generate", required_unless_present = "generate")]
    pub pairs: Option<PathBuf>,
    /// Generate this many synthetic reversal pairs instead of reading --pairs
    #[arg(long)]
    pub generate: Option<usize>,
    /// Also write the generated pairs here
    #[arg(long, requires = "generate")]
    pub write_pairs: Option<PathBuf>,
    /// Report (JSON)
    #[arg(long)]
    pub out: PathBuf,
    /// Per-pair table as TSV
    #[arg(long)]
    pub tsv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AdversarialMode {
    /// Pair each source with another record's candidate.
    FluentIrrelevant,
    /// Perturb candidates with swaps, substitutions, repetitions and deletions.
    DisfluentRelevant,
}

#[derive(Debug, Args)]
pub struct AdversarialArgs {
    #[arg(long, value_enum)]
    pub mode: AdversarialMode,
    /// Input dataset (JSON lines)
    #[arg(long)]
    pub data: PathBuf,
    /// Output dataset (JSON lines)
    #[arg(long)]
    pub out: PathBuf,
    /// Random seed [default: 0]
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON perturbation settings (rates and word sets)
    #[arg(long)]
    pub perturbation: Option<PathBuf>,
    /// Probability of swapping each adjacent pair [default: 0.15]
    #[arg(long)]
    pub swap_rate: Option<f64>,
    /// Probability of replacing an article or preposition [default: 0.5]
    #[arg(long)]
    pub substitution_rate: Option<f64>,
    /// Probability of duplicating each token [default: 0.1]
    #[arg(long)]
    pub repetition_rate: Option<f64>,
    /// Probability of deleting each token [default: 0.1]
    #[arg(long)]
    pub deletion_rate: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticArg {
    Kendall,
    Spearman,
    Pearson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelArg {
    Segment,
    System,
}

#[derive(Debug, Args)]
pub struct MetaEvalArgs {
    /// Score dump produced by score, profile or pmi
    #[arg(long)]
    pub scores: PathBuf,
    /// Dataset with human judgments
    #[arg(long)]
    pub data: PathBuf,
    /// Dataset kind; pairwise reports pairwise accuracy
    #[arg(long, value_enum, default_value = "segment")]
    pub kind: KindArg,
    /// Second score dump compared against --scores with the Williams test
    #[arg(long)]
    pub compare: Option<PathBuf>,
    /// Correlation statistics; repeatable [default: kendall, spearman, pearson]
    #[arg(long = "statistic", value_enum)]
    pub statistics: Vec<StatisticArg>,
    /// Correlation level; repeatable [default: segment]
    #[arg(long = "level", value_enum)]
    pub levels: Vec<LevelArg>,
    /// Bootstrap resamples for confidence intervals; 0 disables
    #[arg(long, default_value_t = 1000)]
    pub bootstrap: usize,
    /// Confidence level of the bootstrap interval
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,
    /// Bootstrap seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report (JSON)
    #[arg(long)]
    pub out: PathBuf,
    /// Report table as TSV
    #[arg(long)]
    pub tsv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKindArg {
    Masked,
    Ar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Barrier,
    Bridge,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Plain-text corpus, one sequence per line
    #[arg(long, required_unless_present = "data")]
    pub corpus: Option<PathBuf>,
    /// Dataset whose sources and candidates are added to the corpus
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Train on "source candidate" concatenations of --data records
    #[arg(long, requires = "data")]
    pub concat: bool,
    #[arg(long, value_enum, default_value = "masked")]
    pub kind: ModelKindArg,
    /// Lowercase tokens
    #[arg(long)]
    pub lowercase: bool,
    /// Add-alpha smoothing constant
    #[arg(long, default_value_t = 1.0)]
    pub alpha_add: f64,
    /// Interpolation weights (trigram, left, right, unigram) of the masked model
    #[arg(long, value_delimiter = ',', num_args = 4, default_values_t = [0.5, 0.2, 0.2, 0.1])]
    pub lambda: Vec<f64>,
    /// Whether context tokens act as neighbors of the first candidate token
    #[arg(long, value_enum, default_value = "barrier")]
    pub policy: PolicyArg,
    /// Accepted for uniformity; training is deterministic
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output model file
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LearnArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Dataset with human judgments
    #[arg(long)]
    pub data: PathBuf,
    /// Human dimension to fit
    #[arg(long)]
    pub dimension: String,
    /// Profile dump from the profile command; computed with the backend otherwise
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    /// Cross-validation folds
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Optimizer restarts
    #[arg(long, default_value_t = 50)]
    pub restarts: usize,
    /// Output weights (JSON)
    #[arg(long)]
    pub out: PathBuf,
}
