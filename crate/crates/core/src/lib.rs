//! Masked-reconstruction scoring of generated text.
//!
//! A candidate text is scored by how well a bidirectional denoiser recovers
//! its tokens after random masking, averaged over masking rates and
//! patterns. The crate provides the forward masking process, a Monte-Carlo
//! estimator with an exhaustive exact counterpart, the four source/candidate
//! scoring configurations with PMI decomposition and timestep profiles,
//! positional and directional bias diagnostics, and the correlation and
//! significance statistics used to meta-evaluate a metric against human
//! judgments.
//!
//! Denoisers are pluggable through [`denoiser::Denoiser`]. Three in-process
//! backends (an interpolated n-gram masked LM, a bigram left-to-right LM and
//! a uniform baseline) plus an HTTP client for remote models are included.

pub mod dataset;
pub mod denoiser;
pub mod diagnostics;
pub mod estimator;
pub mod masking;
pub mod rng;
pub mod scoring;
pub mod stats;
pub mod text;

pub use denoiser::{Denoiser, DenoiserError, DenoiserQuery, DenoiserResponse};
pub use estimator::{estimate, exact_estimate, per_position_scores, EstimatorConfig, ScoreReport, Weighting};
pub use masking::{MaskPattern, MaskingStrategy, TimestepGrid, TokenClass, TokenClassMap};
pub use scoring::{PmiReport, QualityProfile};
pub use text::{TokenSequence, Tokenizer, Vocabulary};
