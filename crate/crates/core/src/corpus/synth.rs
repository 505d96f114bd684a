//! Seeded synthetic cipher corpora.
//!
//! Clean pairs are a random source sentence and its token-wise image under a
//! seeded bijection. Noise and domain membership are assigned to exact counts
//! so that filtering can be checked against the oracle labels.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

use super::{BitextPair, Corpus, DomainTag, OracleLabel};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseFractions {
    #[serde(default)]
    pub misaligned: f64,
    #[serde(default)]
    pub copied: f64,
    #[serde(default)]
    pub truncated: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub n_pairs: usize,
    pub vocab_size_src: usize,
    pub vocab_size_tgt: usize,
    pub mapping_seed: u64,
    #[serde(default)]
    pub noise_fracs: NoiseFractions,
    #[serde(default)]
    pub in_domain_frac: f64,
    pub len_range: [usize; 2],
    pub seed: u64,
    /// Zipf exponent of the token distribution; 0 gives uniform sampling.
    #[serde(default)]
    pub zipf_exponent: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_pairs: 1000,
            vocab_size_src: 64,
            vocab_size_tgt: 64,
            mapping_seed: 1,
            noise_fracs: NoiseFractions::default(),
            in_domain_frac: 0.0,
            len_range: [3, 8],
            seed: 1,
            zipf_exponent: 0.0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let f = self.noise_fracs;
        for (name, v) in [
            ("misaligned", f.misaligned),
            ("copied", f.copied),
            ("truncated", f.truncated),
            ("in_domain_frac", self.in_domain_frac),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("{name} must lie in [0,1], got {v}")));
            }
        }
        if f.misaligned + f.copied + f.truncated > 1.0 + 1e-12 {
            return Err(Error::invalid(format!(
                "noise fractions sum to {} > 1",
                f.misaligned + f.copied + f.truncated
            )));
        }
        let [lo, hi] = self.len_range;
        if lo < 1 || hi > 250 || lo > hi {
            return Err(Error::invalid(format!("len_range must satisfy 1 <= min <= max <= 250, got [{lo},{hi}]")));
        }
        if self.vocab_size_src < 2 || self.vocab_size_src != self.vocab_size_tgt {
            return Err(Error::invalid(
                "a bijective token mapping needs equal source/target vocabulary sizes >= 2",
            ));
        }
        if self.zipf_exponent < 0.0 || !self.zipf_exponent.is_finite() {
            return Err(Error::invalid("zipf_exponent must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Seeded source-to-target token bijection.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenMapping {
    src_to_tgt: Vec<usize>,
}

impl TokenMapping {
    pub fn src_token(i: usize) -> String {
        format!("s{i}")
    }

    pub fn tgt_token(i: usize) -> String {
        format!("t{i}")
    }

    pub fn len(&self) -> usize {
        self.src_to_tgt.len()
    }

    pub fn is_empty(&self) -> bool {
        self.src_to_tgt.is_empty()
    }

    /// (source token, target token) for every entry.
    pub fn entries(&self) -> impl Iterator<Item = (String, String)> + '_ {
        self.src_to_tgt
            .iter()
            .enumerate()
            .map(|(s, &t)| (Self::src_token(s), Self::tgt_token(t)))
    }

    pub fn translate_token(&self, token: &str) -> Option<String> {
        let i: usize = token.strip_prefix('s')?.parse().ok()?;
        self.src_to_tgt.get(i).map(|&t| Self::tgt_token(t))
    }

    /// Image of a source sentence; tokens outside the mapping become `None`.
    pub fn translate(&self, src: &[String]) -> Vec<Option<String>> {
        src.iter().map(|t| self.translate_token(t)).collect()
    }

    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for (s, t) in self.entries() {
            writeln!(w, "{s}\t{t}").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub corpus: Corpus,
    pub mapping: TokenMapping,
}

struct TokenSampler {
    full: WeightedIndex<f64>,
    half: WeightedIndex<f64>,
}

impl TokenSampler {
    fn new(vocab: usize, zipf: f64, rng: &mut ChaCha8Rng) -> Self {
        // Frequency ranks are a random permutation so frequent tokens are spread over both halves.
        let mut rank: Vec<usize> = (0..vocab).collect();
        rank.shuffle(rng);
        let weights: Vec<f64> = rank.iter().map(|&r| 1.0 / ((r + 1) as f64).powf(zipf)).collect();
        let half = (vocab / 2).max(1);
        Self {
            full: WeightedIndex::new(&weights).expect("positive weights"),
            half: WeightedIndex::new(&weights[..half]).expect("positive weights"),
        }
    }

    fn sentence(&self, rng: &mut ChaCha8Rng, len_range: [usize; 2], in_domain: bool) -> Vec<usize> {
        let len = rng.gen_range(len_range[0]..=len_range[1]);
        let dist = if in_domain { &self.half } else { &self.full };
        (0..len).map(|_| dist.sample(rng)).collect()
    }
}

fn exact_count(frac: f64, n: usize) -> usize {
    (frac * n as f64).round() as usize
}

pub fn synth_generate(spec: &SynthSpec) -> Result<SynthCorpus> {
    spec.validate()?;
    let n = spec.n_pairs;
    let v = spec.vocab_size_src;

    let mut src_to_tgt: Vec<usize> = (0..v).collect();
    src_to_tgt.shuffle(&mut seed::rng(spec.mapping_seed));
    let mapping = TokenMapping { src_to_tgt };

    let sampler = TokenSampler::new(v, spec.zipf_exponent, &mut seed::rng_for(spec.seed, "synth.ranks"));

    let mut in_domain = vec![false; n];
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng_for(spec.seed, "synth.domain"));
    for &i in &order[..exact_count(spec.in_domain_frac, n).min(n)] {
        in_domain[i] = true;
    }

    let mut labels = vec![OracleLabel::Clean; n];
    order.sort_unstable();
    order.shuffle(&mut seed::rng_for(spec.seed, "synth.noise"));
    let f = spec.noise_fracs;
    let mut cursor = 0;
    for (label, frac) in [
        (OracleLabel::Misaligned, f.misaligned),
        (OracleLabel::Copied, f.copied),
        (OracleLabel::Truncated, f.truncated),
    ] {
        let k = exact_count(frac, n).min(n - cursor);
        for &i in &order[cursor..cursor + k] {
            labels[i] = label;
        }
        cursor += k;
    }

    let mut rng = seed::rng_for(spec.seed, "synth.pairs");
    let src_words = |ids: &[usize]| ids.iter().map(|&i| TokenMapping::src_token(i)).collect::<Vec<_>>();
    let tgt_words = |ids: &[usize]| {
        ids.iter()
            .map(|&i| TokenMapping::tgt_token(mapping.src_to_tgt[i]))
            .collect::<Vec<_>>()
    };
    let mut pairs = Vec::with_capacity(n);
    for id in 0..n {
        let src = sampler.sentence(&mut rng, spec.len_range, in_domain[id]);
        let tgt = match labels[id] {
            OracleLabel::Clean => tgt_words(&src),
            OracleLabel::Misaligned => tgt_words(&sampler.sentence(&mut rng, spec.len_range, in_domain[id])),
            OracleLabel::Copied => src_words(&src),
            OracleLabel::Truncated => {
                let mut t = tgt_words(&src);
                let drop = t.len().div_ceil(2).min(t.len() - 1);
                t.truncate(t.len() - drop);
                t
            }
        };
        pairs.push(BitextPair {
            id,
            src: src_words(&src),
            tgt,
            oracle: Some(labels[id]),
            domain: Some(if in_domain[id] { DomainTag::InDomain } else { DomainTag::General }),
        });
    }
    let corpus = Corpus::new(format!("synth-{}", spec.seed), DomainTag::General, pairs)?;
    Ok(SynthCorpus { corpus, mapping })
}
