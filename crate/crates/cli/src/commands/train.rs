use std::fs;

use anyhow::Context;
use maskscore::denoiser::{MaskedLmParams, ModelFile, SentinelPolicy, ToyArLm, ToyMaskedLm, ToyModel};
use maskscore::text::OovPolicy;
use maskscore::{TokenSequence, Tokenizer, Vocabulary};

use super::load_segments;
use crate::args::{ModelKindArg, PolicyArg, TrainArgs};
use crate::exit;

pub fn run(args: TrainArgs) -> anyhow::Result<u8> {
    let mut lines: Vec<String> = Vec::new();
    if let Some(path) = &args.corpus {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        lines.extend(text.lines().filter(|l| !l.trim().is_empty()).map(str::to_string));
    }
    if let Some(path) = &args.data {
        for r in load_segments(path)? {
            if args.concat {
                lines.push(format!("{} {}", r.source, r.candidate));
            } else {
                lines.extend([r.source, r.candidate].into_iter().filter(|l| !l.trim().is_empty()));
            }
        }
    }
    if lines.is_empty() {
        return Err(exit::data("training corpus is empty"));
    }
    let tokenizer = if args.lowercase { Tokenizer::WhitespaceLower } else { Tokenizer::Whitespace };
    let vocab = Vocabulary::build(&lines, tokenizer).map_err(|e| exit::data(e.to_string()))?;
    let corpus: Vec<TokenSequence> =
        lines.iter().map(|l| vocab.tokenize(l, OovPolicy::Error)).collect::<Result<_, _>>()?;
    let model = match args.kind {
        ModelKindArg::Masked => {
            let lambda: [f64; 4] =
                args.lambda.as_slice().try_into().map_err(|_| exit::usage("--lambda takes 4 values"))?;
            let policy = match args.policy {
                PolicyArg::Barrier => SentinelPolicy::Barrier,
                PolicyArg::Bridge => SentinelPolicy::Bridge,
            };
            let params = MaskedLmParams { lambda, alpha_add: args.alpha_add, policy };
            ToyModel::Masked(ToyMaskedLm::train(&corpus, vocab.size(), params)?)
        }
        ModelKindArg::Ar => ToyModel::Ar(ToyArLm::train(&corpus, vocab.size(), args.alpha_add)?),
    };
    let file = ModelFile { vocab, model };
    let mut bytes = Vec::new();
    file.write_to(&mut bytes)?;
    maskscore::dataset::write_atomic(&args.out, &bytes)?;
    eprintln!("trained on {} sequences, vocabulary of {}", corpus.len(), file.vocab_size());
    Ok(0)
}
