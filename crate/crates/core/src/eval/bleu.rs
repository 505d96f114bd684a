use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::nmt::TranslationModel;

const MAX_N: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothing {
    None,
    /// Adds one to the matches and the total of every order n >= 2.
    #[default]
    AddOne,
}

impl FromStr for Smoothing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Smoothing::None),
            "add_one" => Ok(Smoothing::AddOne),
            _ => Err(Error::invalid(format!("unknown smoothing '{s}' (expected none or add_one)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuResult {
    /// In [0, 100].
    pub score: f64,
    pub precisions: [f64; MAX_N],
    pub brevity_penalty: f64,
    pub hyp_len: usize,
    pub ref_len: usize,
}

impl fmt::Display for BleuResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p: Vec<String> = self.precisions.iter().map(|p| format!("{:.1}", 100.0 * p)).collect();
        write!(
            f,
            "BLEU = {:.2} {} (BP = {:.3}, hyp_len = {}, ref_len = {})",
            self.score,
            p.join("/"),
            self.brevity_penalty,
            self.hyp_len,
            self.ref_len
        )
    }
}

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut out = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *out.entry(w.iter().map(AsRef::as_ref).collect()).or_insert(0) += 1;
        }
    }
    out
}

/// Corpus-level 4-gram BLEU with clipped counts and a single reference per hypothesis.
pub fn corpus_bleu<S: AsRef<str>>(hyps: &[Vec<S>], refs: &[Vec<S>], smoothing: Smoothing) -> Result<BleuResult> {
    if hyps.len() != refs.len() {
        return Err(Error::Alignment { src: hyps.len(), tgt: refs.len() });
    }
    if hyps.is_empty() {
        return Err(Error::invalid("BLEU needs at least one hypothesis"));
    }
    let mut matches = [0usize; MAX_N];
    let mut totals = [0usize; MAX_N];
    let (mut hyp_len, mut ref_len) = (0, 0);
    for (h, r) in hyps.iter().zip(refs) {
        hyp_len += h.len();
        ref_len += r.len();
        for n in 1..=MAX_N {
            let rc = ngram_counts(r, n);
            for (g, c) in ngram_counts(h, n) {
                matches[n - 1] += c.min(rc.get(&g).copied().unwrap_or(0));
            }
            totals[n - 1] += h.len().saturating_sub(n - 1);
        }
    }
    let mut precisions = [0.0; MAX_N];
    for n in 0..MAX_N {
        let (m, t) = match smoothing {
            Smoothing::AddOne if n > 0 => (matches[n] + 1, totals[n] + 1),
            _ => (matches[n], totals[n]),
        };
        precisions[n] = if t == 0 { 0.0 } else { m as f64 / t as f64 };
    }
    let brevity_penalty = if hyp_len == 0 {
        0.0
    } else if hyp_len < ref_len {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    } else {
        1.0
    };
    let score = if precisions.iter().any(|p| *p == 0.0) {
        0.0
    } else {
        let log_mean = precisions.iter().map(|p| p.ln()).sum::<f64>() / MAX_N as f64;
        100.0 * brevity_penalty * log_mean.exp()
    };
    Ok(BleuResult { score, precisions, brevity_penalty, hyp_len, ref_len })
}

/// Greedy decoding budget for a source sentence.
pub fn decode_max_len(src_len: usize) -> usize {
    (2 * src_len + 10).min(crate::corpus::DEFAULT_MAX_LEN)
}

/// Greedy translations of every source sentence, in corpus order.
pub fn model_translations(model: &TranslationModel, corpus: &Corpus) -> Vec<Vec<String>> {
    let data = model.encode_corpus(corpus);
    data.pairs
        .par_iter()
        .map(|ex| {
            let ids = model.translate_greedy_ids(&ex.src, decode_max_len(ex.src.len()));
            model.tgt_vocab().decode(&ids)
        })
        .collect()
}

/// BLEU of the model's greedy translations against the corpus targets.
pub fn model_bleu(model: &TranslationModel, corpus: &Corpus, smoothing: Smoothing) -> Result<BleuResult> {
    let hyps = model_translations(model, corpus);
    let refs: Vec<Vec<String>> = corpus.pairs().iter().map(|p| p.tgt.clone()).collect();
    corpus_bleu(&hyps, &refs, smoothing)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn identity_is_100() {
        let h = vec![toks("a b c d e"), toks("f g h i")];
        let b = corpus_bleu(&h, &h, Smoothing::None).unwrap();
        assert_eq!(b.score, 100.0);
        assert_eq!(corpus_bleu(&h, &h, Smoothing::AddOne).unwrap().score, 100.0);
    }

    #[test]
    fn disjoint_is_zero() {
        let b = corpus_bleu(&[toks("a b c d")], &[toks("w x y z")], Smoothing::None).unwrap();
        assert_eq!(b.score, 0.0);
    }

    #[test]
    fn short_hypothesis() {
        let b = corpus_bleu(&[toks("a b c d")], &[toks("a b c d e")], Smoothing::None).unwrap();
        assert_eq!(b.precisions, [1.0; 4]);
        assert!((b.brevity_penalty - (-0.25f64).exp()).abs() < 1e-15);
        assert!((b.score - 77.88007830714049).abs() < 1e-9);
    }

    #[test]
    fn clipping() {
        // "the the the" against "the cat": unigram matches clip at 1.
        let b = corpus_bleu(&[toks("the the the")], &[toks("the cat")], Smoothing::None).unwrap();
        assert!((b.precisions[0] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn add_one_leaves_unigrams_alone() {
        let b = corpus_bleu(&[toks("a x")], &[toks("a b")], Smoothing::AddOne).unwrap();
        assert_eq!(b.precisions[0], 0.5);
        assert_eq!(b.precisions[1], 1.0 / 2.0);
        assert_eq!(b.precisions[2], 1.0);
        assert!(b.score > 0.0);
    }

    #[test]
    fn length_mismatch() {
        assert!(corpus_bleu(&[toks("a")], &[], Smoothing::None).is_err());
    }
}
