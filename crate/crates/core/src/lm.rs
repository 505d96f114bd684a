//! Interpolated Kneser-Ney n-gram language models.
//!
//! Sentences are padded with `order - 1` begin markers and one end marker.
//! The predicted support is every vocabulary id except padding and the begin
//! marker, so unknown words and the end marker always receive mass.

use std::collections::HashMap;
use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::binio::{Reader, Writer};
use crate::corpus::{Corpus, DomainTag, Side, Vocab, BOS, EOS, N_SPECIALS};
use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 5;
pub const DEFAULT_ORDER: usize = 3;
pub const DEFAULT_DISCOUNT: f64 = 0.75;

const MAGIC: &[u8; 4] = b"NGLM";
const VERSION: u16 = 1;
const ID_BITS: u32 = 24;

fn pack(ids: &[u32]) -> u128 {
    ids.iter().fold(0u128, |acc, &id| (acc << ID_BITS) | id as u128)
}

#[derive(Debug, Clone, Copy, Default)]
struct ContextStats {
    total: u32,
    distinct: u32,
}

#[derive(Debug, Clone)]
pub struct NGramLanguageModel {
    order: usize,
    discount: f64,
    vocab: Vocab,
    side: Side,
    domain: DomainTag,
    /// `counts[k-1]` holds order-k counts: raw at the top order, continuation counts below.
    counts: Vec<HashMap<u128, u32>>,
    /// `contexts[k-1]` is keyed by the (k-1)-token context of order-k grams; index 0 is unused.
    contexts: Vec<HashMap<u128, ContextStats>>,
    unigram: ContextStats,
}

impl NGramLanguageModel {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn domain(&self) -> DomainTag {
        self.domain
    }

    /// Number of ids that can be predicted.
    pub fn support_size(&self) -> usize {
        self.vocab.len() - 2
    }

    /// Every predictable id: unknown, end marker and the regular tokens.
    pub fn support(&self) -> impl Iterator<Item = u32> {
        std::iter::once(crate::corpus::UNK)
            .chain(std::iter::once(EOS))
            .chain(N_SPECIALS as u32..self.vocab.len() as u32)
    }

    /// Conditional probability of `word` given up to `order - 1` preceding ids
    /// (older ids first). Shorter histories should be left-padded with the begin id.
    pub fn prob(&self, history: &[u32], word: u32) -> f64 {
        let h = &history[history.len().saturating_sub(self.order - 1)..];
        self.prob_at(h, word)
    }

    fn prob_at(&self, history: &[u32], word: u32) -> f64 {
        let d = self.discount;
        if history.is_empty() {
            let c = self.counts[0].get(&(word as u128)).copied().unwrap_or(0) as f64;
            let uniform = 1.0 / self.support_size() as f64;
            let s = self.unigram;
            if s.total == 0 {
                return uniform;
            }
            let t = s.total as f64;
            return (c - d).max(0.0) / t + d * s.distinct as f64 / t * uniform;
        }
        let lower = self.prob_at(&history[1..], word);
        let k = history.len() + 1;
        let ctx = pack(history);
        match self.contexts[k - 1].get(&ctx) {
            Some(s) if s.total > 0 => {
                let key = (ctx << ID_BITS) | word as u128;
                let c = self.counts[k - 1].get(&key).copied().unwrap_or(0) as f64;
                let t = s.total as f64;
                (c - d).max(0.0) / t + d * s.distinct as f64 / t * lower
            }
            _ => lower,
        }
    }

    fn scored(&self, sentence: &[String]) -> Vec<f64> {
        let mut ids = vec![BOS; self.order - 1];
        ids.extend(self.vocab.encode(sentence));
        ids.push(EOS);
        (self.order - 1..ids.len())
            .map(|i| self.prob_at(&ids[i + 1 - self.order..i], ids[i]).ln())
            .collect()
    }

    /// Summed negative log-likelihood (natural log) including the end marker.
    pub fn total_negloglik(&self, sentence: &[String]) -> f64 {
        -self.scored(sentence).iter().sum::<f64>()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = Writer::new(BufWriter::new(file));
        self.write_to(&mut w).map_err(|e| Error::io(path, e))
    }

    fn write_to<W: std::io::Write>(&self, w: &mut Writer<W>) -> std::io::Result<()> {
        w.bytes(MAGIC)?;
        w.u16(VERSION)?;
        w.u8(self.order as u8)?;
        w.f64(self.discount)?;
        w.u8(matches!(self.side, Side::Target) as u8)?;
        w.u8(matches!(self.domain, DomainTag::InDomain) as u8)?;
        w.u32(self.vocab.min_count() as u32)?;
        w.u32(self.vocab.regular_tokens().len() as u32)?;
        for t in self.vocab.regular_tokens() {
            w.str(t)?;
        }
        for table in &self.counts {
            let mut entries: Vec<(&u128, &u32)> = table.iter().collect();
            entries.sort_unstable();
            w.u64(entries.len() as u64)?;
            for (k, c) in entries {
                w.u128(*k)?;
                w.u32(*c)?;
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = Reader::new(BufReader::new(file), "NGLM");
        r.header(MAGIC, VERSION)?;
        let order = r.u8()? as usize;
        if !(1..=MAX_ORDER).contains(&order) {
            return Err(r.malformed(format!("order {order} out of range")));
        }
        let discount = r.f64()?;
        let side = if r.u8()? == 1 { Side::Target } else { Side::Source };
        let domain = if r.u8()? == 1 { DomainTag::InDomain } else { DomainTag::General };
        let min_count = r.u32()? as usize;
        let n_tokens = r.u32()? as usize;
        let tokens = (0..n_tokens).map(|_| r.str()).collect::<Result<Vec<_>>>()?;
        let vocab = Vocab::from_tokens(side, min_count, tokens)?;
        let mut counts = Vec::with_capacity(order);
        for _ in 0..order {
            let n = r.u64()? as usize;
            let mut table = HashMap::with_capacity(n);
            for _ in 0..n {
                let k = r.u128()?;
                table.insert(k, r.u32()?);
            }
            counts.push(table);
        }
        Ok(Self::from_counts(order, discount, vocab, side, domain, counts))
    }

    fn from_counts(
        order: usize,
        discount: f64,
        vocab: Vocab,
        side: Side,
        domain: DomainTag,
        counts: Vec<HashMap<u128, u32>>,
    ) -> Self {
        let mut contexts = vec![HashMap::new(); order];
        let mut unigram = ContextStats::default();
        for (k, table) in counts.iter().enumerate() {
            for (&key, &c) in table {
                let s = if k == 0 {
                    &mut unigram
                } else {
                    contexts[k].entry(key >> ID_BITS).or_insert_with(ContextStats::default)
                };
                s.total += c;
                s.distinct += 1;
            }
        }
        Self { order, discount, vocab, side, domain, counts, contexts, unigram }
    }
}

/// Trains an interpolated Kneser-Ney model on one side of `corpus`.
pub fn train_ngram(
    corpus: &Corpus,
    side: Side,
    order: usize,
    vocab: &Vocab,
    discount: f64,
    domain: DomainTag,
) -> Result<NGramLanguageModel> {
    if !(1..=MAX_ORDER).contains(&order) {
        return Err(Error::invalid(format!("order must be in [1,{MAX_ORDER}], got {order}")));
    }
    if !(discount > 0.0 && discount < 1.0) {
        return Err(Error::invalid(format!("discount must be in (0,1), got {discount}")));
    }
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus(format!("cannot train a language model on '{}'", corpus.name())));
    }
    if vocab.side() != side {
        return Err(Error::VocabMismatch(format!(
            "{} vocabulary used for a {} language model",
            vocab.side().name(),
            side.name()
        )));
    }
    if vocab.len() >= 1 << ID_BITS {
        return Err(Error::invalid("vocabulary too large for n-gram packing"));
    }

    let mut top: HashMap<u128, u32> = HashMap::new();
    let mut ids = Vec::new();
    for p in corpus.pairs() {
        ids.clear();
        ids.resize(order - 1, BOS);
        ids.extend(vocab.encode(p.side(side)));
        ids.push(EOS);
        for w in ids.windows(order) {
            *top.entry(pack(w)).or_default() += 1;
        }
    }

    // Lower orders count distinct left extensions of the next order up.
    let mut counts = vec![HashMap::new(); order];
    let mut types: Vec<u128> = top.keys().copied().collect();
    types.sort_unstable();
    counts[order - 1] = top;
    for k in (1..order).rev() {
        let mask = (1u128 << (ID_BITS * k as u32)) - 1;
        let mut cc: HashMap<u128, u32> = HashMap::new();
        for &t in &types {
            *cc.entry(t & mask).or_default() += 1;
        }
        types = cc.keys().copied().collect();
        types.sort_unstable();
        counts[k - 1] = cc;
    }
    Ok(NGramLanguageModel::from_counts(order, discount, vocab.clone(), side, domain, counts))
}

/// Per-token average negative log-likelihood (natural log) over the scored
/// positions, end marker included.
pub fn lm_negloglik(lm: &NGramLanguageModel, sentence: &[String]) -> Result<f64> {
    if sentence.is_empty() {
        return Err(Error::invalid("cannot score an empty sentence"));
    }
    let lp = lm.scored(sentence);
    Ok(-lp.iter().sum::<f64>() / lp.len() as f64)
}
