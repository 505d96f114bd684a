use rayon::prelude::*;

use super::{EntropyMode, Method, ScoreRecord};
use crate::corpus::{Corpus, Side};
use crate::error::{Error, Result};
use crate::nmt::TranslationModel;

/// `|h_f - h_b| + (h_f + h_b) / 2`; lower is better.
pub fn dcce_score(h_f: f64, h_b: f64) -> f64 {
    (h_f - h_b).abs() + 0.5 * (h_f + h_b)
}

fn unknown_rate(model_vocab: &crate::corpus::Vocab, corpus: &Corpus, side: Side) -> f64 {
    let (mut unk, mut total) = (0usize, 0usize);
    for p in corpus.pairs() {
        for t in p.side(side) {
            total += 1;
            unk += !model_vocab.contains(t) as usize;
        }
    }
    unk as f64 / total.max(1) as f64
}

/// Dual conditional cross-entropy of every pair under a forward (source to
/// target) and a backward (target to source) model.
pub fn score_corpus_dcce(
    corpus: &Corpus,
    fwd: &TranslationModel,
    bwd: &TranslationModel,
    mode: EntropyMode,
) -> Result<Vec<ScoreRecord>> {
    if fwd.src_vocab() != bwd.tgt_vocab() || fwd.tgt_vocab() != bwd.src_vocab() {
        return Err(Error::VocabMismatch("backward model vocabularies must mirror the forward model".into()));
    }
    for (v, side) in [(fwd.src_vocab(), Side::Source), (fwd.tgt_vocab(), Side::Target)] {
        let rate = unknown_rate(v, corpus, side);
        if rate > 0.5 {
            return Err(Error::VocabMismatch(format!(
                "{:.0}% of the corpus {} tokens are unknown to the models",
                100.0 * rate,
                side.name()
            )));
        }
    }
    let entropy = |m: &TranslationModel, pair: &crate::corpus::BitextPair| {
        let lp = m.forward_logprobs(pair);
        let sum = -lp.iter().sum::<f64>();
        match mode {
            EntropyMode::PerToken => sum / lp.len() as f64,
            EntropyMode::Sum => sum,
        }
    };
    Ok(corpus
        .pairs()
        .par_iter()
        .map(|p| {
            let h_f = entropy(fwd, p);
            let h_b = entropy(bwd, &p.reversed());
            ScoreRecord { pair_id: p.id, value: dcce_score(h_f, h_b), method: Method::Dcce }
        })
        .collect())
}
