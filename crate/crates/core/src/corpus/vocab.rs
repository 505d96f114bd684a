use std::collections::HashMap;

use crate::error::{Error, Result};

use super::{Corpus, Side};

pub const PAD: u32 = 0;
pub const UNK: u32 = 1;
pub const BOS: u32 = 2;
pub const EOS: u32 = 3;
pub const N_SPECIALS: usize = 4;

const SPECIAL_NAMES: [&str; N_SPECIALS] = ["<pad>", "<unk>", "<s>", "</s>"];

/// Token/id bijection for one side of a corpus. Special ids occupy `0..4`.
#[derive(Debug, Clone)]
pub struct Vocab {
    side: Side,
    min_count: usize,
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl PartialEq for Vocab {
    fn eq(&self, other: &Self) -> bool {
        self.side == other.side && self.tokens == other.tokens
    }
}

impl Vocab {
    /// Builds from an ordered list of regular tokens (specials are prepended).
    pub fn from_tokens(side: Side, min_count: usize, regular: impl IntoIterator<Item = String>) -> Result<Self> {
        let mut tokens: Vec<String> = SPECIAL_NAMES.iter().map(|s| s.to_string()).collect();
        let mut index: HashMap<String, u32> =
            tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        for tok in regular {
            if index.contains_key(&tok) {
                return Err(Error::invalid(format!("duplicate vocabulary token '{tok}'")));
            }
            index.insert(tok.clone(), tokens.len() as u32);
            tokens.push(tok);
        }
        Ok(Self { side, min_count, tokens, index })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn min_count(&self) -> usize {
        self.min_count
    }

    /// Total size including specials.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() == N_SPECIALS
    }

    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<u32> {
        tokens.iter().map(|t| self.id(t)).collect()
    }

    pub fn decode(&self, ids: &[u32]) -> Vec<String> {
        ids.iter().map(|&i| self.token(i).to_owned()).collect()
    }

    /// Regular (non-special) tokens in id order.
    pub fn regular_tokens(&self) -> &[String] {
        &self.tokens[N_SPECIALS..]
    }
}

/// Ids by descending frequency, ties broken lexicographically; tokens below
/// `min_count` map to the unknown id.
pub fn build_vocab(corpus: &Corpus, side: Side, min_count: usize) -> Result<Vocab> {
    if min_count == 0 {
        return Err(Error::invalid("min_count must be >= 1"));
    }
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus(format!("cannot build a vocabulary from '{}'", corpus.name())));
    }
    let mut freq: HashMap<&str, usize> = HashMap::new();
    for p in corpus.pairs() {
        for t in p.side(side) {
            *freq.entry(t.as_str()).or_default() += 1;
        }
    }
    let mut entries: Vec<(&str, usize)> = freq
        .into_iter()
        .filter(|(t, c)| *c >= min_count && !SPECIAL_NAMES.contains(t))
        .collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Vocab::from_tokens(side, min_count, entries.into_iter().map(|(t, _)| t.to_owned()))
}
