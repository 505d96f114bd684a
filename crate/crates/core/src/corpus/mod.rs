//! Parallel corpora: ingestion, cleaning, splitting, vocabularies and
//! synthetic cipher corpora with oracle noise labels.

mod synth;
mod vocab;

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub use synth::{synth_generate, NoiseFractions, SynthCorpus, SynthSpec, TokenMapping};
pub use vocab::{build_vocab, Vocab, BOS, EOS, N_SPECIALS, PAD, UNK};

pub const DEFAULT_MAX_LEN: usize = 250;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Source,
    Target,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Source => "source",
            Side::Target => "target",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainTag {
    General,
    InDomain,
}

impl DomainTag {
    pub fn name(self) -> &'static str {
        match self {
            DomainTag::General => "general",
            DomainTag::InDomain => "in_domain",
        }
    }
}

impl FromStr for DomainTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "general" => Ok(DomainTag::General),
            "in_domain" => Ok(DomainTag::InDomain),
            other => Err(Error::invalid(format!("unknown domain tag '{other}'"))),
        }
    }
}

/// Ground-truth noise label attached to synthetic pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleLabel {
    Clean,
    Misaligned,
    Copied,
    Truncated,
}

impl OracleLabel {
    pub fn name(self) -> &'static str {
        match self {
            OracleLabel::Clean => "clean",
            OracleLabel::Misaligned => "misaligned",
            OracleLabel::Copied => "copied",
            OracleLabel::Truncated => "truncated",
        }
    }
}

impl FromStr for OracleLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clean" => Ok(OracleLabel::Clean),
            "misaligned" => Ok(OracleLabel::Misaligned),
            "copied" => Ok(OracleLabel::Copied),
            "truncated" => Ok(OracleLabel::Truncated),
            other => Err(Error::invalid(format!("unknown oracle label '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tokenizer {
    #[default]
    Whitespace,
    Char,
}

impl Tokenizer {
    pub fn tokenize(self, line: &str) -> Vec<String> {
        match self {
            Tokenizer::Whitespace => line.split_whitespace().map(str::to_owned).collect(),
            Tokenizer::Char => line
                .chars()
                .filter(|c| !c.is_whitespace())
                .map(String::from)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BitextPair {
    pub id: usize,
    pub src: Vec<String>,
    pub tgt: Vec<String>,
    pub oracle: Option<OracleLabel>,
    /// Per-pair domain metadata (synthetic corpora only).
    pub domain: Option<DomainTag>,
}

impl BitextPair {
    pub fn new(id: usize, src: Vec<String>, tgt: Vec<String>) -> Self {
        Self { id, src, tgt, oracle: None, domain: None }
    }

    /// The same pair with source and target swapped, for backward models.
    pub fn reversed(&self) -> Self {
        Self {
            id: self.id,
            src: self.tgt.clone(),
            tgt: self.src.clone(),
            oracle: self.oracle,
            domain: self.domain,
        }
    }

    pub fn side(&self, side: Side) -> &[String] {
        match side {
            Side::Source => &self.src,
            Side::Target => &self.tgt,
        }
    }
}

/// An immutable, id-stamped list of sentence pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    name: String,
    domain_tag: DomainTag,
    pairs: Vec<BitextPair>,
}

impl Corpus {
    /// Builds a corpus from pairs whose ids must be unique.
    pub fn new(name: impl Into<String>, domain_tag: DomainTag, pairs: Vec<BitextPair>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(pairs.len());
        for p in &pairs {
            if !seen.insert(p.id) {
                return Err(Error::invalid(format!("duplicate pair id {}", p.id)));
            }
        }
        Ok(Self { name: name.into(), domain_tag, pairs })
    }

    /// Assigns ids 0..N-1 in order.
    pub fn from_token_pairs(
        name: impl Into<String>,
        pairs: impl IntoIterator<Item = (Vec<String>, Vec<String>)>,
    ) -> Self {
        let pairs = pairs
            .into_iter()
            .enumerate()
            .map(|(id, (s, t))| BitextPair::new(id, s, t))
            .collect();
        Self { name: name.into(), domain_tag: DomainTag::General, pairs }
    }

    /// Convenience for tests and examples: whitespace-tokenizes each side.
    pub fn from_lines<'a>(name: impl Into<String>, pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        Self::from_token_pairs(
            name,
            pairs
                .into_iter()
                .map(|(s, t)| (Tokenizer::Whitespace.tokenize(s), Tokenizer::Whitespace.tokenize(t))),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain_tag(&self) -> DomainTag {
        self.domain_tag
    }

    pub fn pairs(&self) -> &[BitextPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn ids(&self) -> Vec<usize> {
        self.pairs.iter().map(|p| p.id).collect()
    }

    /// Pairs whose id is in `ids`, in corpus order, keeping their ids.
    ///
    /// Declaring the result `InDomain` records that it is a subset of this corpus.
    pub fn subset(&self, name: impl Into<String>, domain_tag: DomainTag, ids: &[usize]) -> Corpus {
        let keep: HashSet<usize> = ids.iter().copied().collect();
        Corpus {
            name: name.into(),
            domain_tag,
            pairs: self.pairs.iter().filter(|p| keep.contains(&p.id)).cloned().collect(),
        }
    }

    /// Pairs whose per-pair domain metadata is in-domain.
    pub fn in_domain_subset(&self) -> Corpus {
        let ids: Vec<usize> = self
            .pairs
            .iter()
            .filter(|p| p.domain == Some(DomainTag::InDomain))
            .map(|p| p.id)
            .collect();
        self.subset(format!("{}.in_domain", self.name), DomainTag::InDomain, &ids)
    }

    /// Same pairs with ids renumbered 0..N-1 in order.
    pub fn reindexed(&self) -> Corpus {
        let mut pairs = self.pairs.clone();
        for (i, p) in pairs.iter_mut().enumerate() {
            p.id = i;
        }
        Corpus { name: self.name.clone(), domain_tag: self.domain_tag, pairs }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_domain_tag(mut self, tag: DomainTag) -> Self {
        self.domain_tag = tag;
        self
    }

    /// Swaps source and target on every pair.
    pub fn reversed(&self) -> Corpus {
        Corpus {
            name: format!("{}.rev", self.name),
            domain_tag: self.domain_tag,
            pairs: self.pairs.iter().map(BitextPair::reversed).collect(),
        }
    }
}

impl fmt::Display for Corpus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} pairs, {})", self.name, self.pairs.len(), self.domain_tag.name())
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| match e.kind() {
            std::io::ErrorKind::InvalidData => Error::Parse { line: i + 1, msg: "invalid UTF-8".into() },
            _ => Error::io(path, e),
        })?;
        out.push(line);
    }
    Ok(out)
}

fn corpus_name(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("corpus").to_owned()
}

/// Loads two line-aligned files, one sentence per line.
pub fn load_parallel(src_path: &Path, tgt_path: &Path, tokenizer: Tokenizer) -> Result<Corpus> {
    let src = read_lines(src_path)?;
    let tgt = read_lines(tgt_path)?;
    if src.len() != tgt.len() {
        return Err(Error::Alignment { src: src.len(), tgt: tgt.len() });
    }
    if src.is_empty() {
        return Err(Error::EmptyCorpus(src_path.display().to_string()));
    }
    Ok(Corpus::from_token_pairs(
        corpus_name(src_path),
        src.iter().zip(&tgt).map(|(s, t)| (tokenizer.tokenize(s), tokenizer.tokenize(t))),
    ))
}

/// Loads a two-column tab-separated file.
pub fn load_tsv(path: &Path, tokenizer: Tokenizer) -> Result<Corpus> {
    let lines = read_lines(path)?;
    if lines.is_empty() {
        return Err(Error::EmptyCorpus(path.display().to_string()));
    }
    let mut pairs = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 2 {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("expected 2 tab-separated columns, found {}", cols.len()),
            });
        }
        pairs.push((tokenizer.tokenize(cols[0]), tokenizer.tokenize(cols[1])));
    }
    Ok(Corpus::from_token_pairs(corpus_name(path), pairs))
}

/// Writes `id, src, tgt, oracle_label, domain` rows. Unlabeled pairs get `-`.
pub fn write_labeled_tsv(corpus: &Corpus, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for p in corpus.pairs() {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}",
            p.id,
            p.src.join(" "),
            p.tgt.join(" "),
            p.oracle.map_or("-", OracleLabel::name),
            p.domain.map_or("-", DomainTag::name),
        )
        .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads the format written by [`write_labeled_tsv`]. The domain column is optional.
pub fn read_labeled_tsv(path: &Path) -> Result<Corpus> {
    let lines = read_lines(path)?;
    if lines.is_empty() {
        return Err(Error::EmptyCorpus(path.display().to_string()));
    }
    let mut pairs = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        let cols: Vec<&str> = line.split('\t').collect();
        let parse_err = |msg: String| Error::Parse { line: i + 1, msg };
        if cols.len() != 4 && cols.len() != 5 {
            return Err(parse_err(format!("expected 4 or 5 columns, found {}", cols.len())));
        }
        let id = cols[0].parse::<usize>().map_err(|e| parse_err(format!("bad id: {e}")))?;
        let oracle = match cols[3] {
            "-" => None,
            s => Some(s.parse::<OracleLabel>().map_err(|e| parse_err(e.to_string()))?),
        };
        let domain = match cols.get(4) {
            None | Some(&"-") => None,
            Some(s) => Some(s.parse::<DomainTag>().map_err(|e| parse_err(e.to_string()))?),
        };
        pairs.push(BitextPair {
            id,
            src: Tokenizer::Whitespace.tokenize(cols[1]),
            tgt: Tokenizer::Whitespace.tokenize(cols[2]),
            oracle,
            domain,
        });
    }
    Corpus::new(corpus_name(path), DomainTag::General, pairs)
}

/// Loads any supported corpus layout: labeled TSV (4-5 columns) or plain 2-column TSV.
pub fn load_any_tsv(path: &Path) -> Result<Corpus> {
    let first = read_lines(path)?
        .into_iter()
        .next()
        .ok_or_else(|| Error::EmptyCorpus(path.display().to_string()))?;
    if first.split('\t').count() >= 4 {
        read_labeled_tsv(path)
    } else {
        load_tsv(path, Tokenizer::Whitespace)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanStats {
    pub dropped_by_length: usize,
    pub dropped_empty: usize,
    pub dropped_dupes: usize,
}

/// Drops over-long and empty-sided pairs and exact duplicates (first occurrence wins),
/// then renumbers ids 0..M-1.
pub fn clean_dedup(corpus: &Corpus, max_len: usize) -> Result<(Corpus, CleanStats)> {
    if max_len == 0 {
        return Err(Error::invalid("max_len must be >= 1"));
    }
    let mut stats = CleanStats::default();
    let mut seen: HashSet<(&[String], &[String])> = HashSet::new();
    let mut kept = Vec::new();
    for p in corpus.pairs() {
        if p.src.is_empty() || p.tgt.is_empty() {
            stats.dropped_empty += 1;
        } else if p.src.len() > max_len || p.tgt.len() > max_len {
            stats.dropped_by_length += 1;
        } else if !seen.insert((&p.src, &p.tgt)) {
            stats.dropped_dupes += 1;
        } else {
            kept.push(p.clone());
        }
    }
    for (i, p) in kept.iter_mut().enumerate() {
        p.id = i;
    }
    Ok((
        Corpus { name: corpus.name.clone(), domain_tag: corpus.domain_tag, pairs: kept },
        stats,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self { train: 0.8, valid: 0.1, test: 0.1 }
    }
}

#[derive(Debug, Clone)]
pub struct Splits {
    pub train: Corpus,
    pub valid: Corpus,
    pub test: Corpus,
}

/// Seeded random partition. Valid and test get `floor(frac * N)` pairs; the
/// remainder goes to train. Pairs keep their ids.
pub fn split(corpus: &Corpus, fracs: SplitFractions, seed: u64) -> Result<Splits> {
    let SplitFractions { train, valid, test } = fracs;
    if !(train > 0.0 && valid > 0.0 && test > 0.0) || ((train + valid + test) - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "split fractions must be positive and sum to 1, got ({train}, {valid}, {test})"
        )));
    }
    let n = corpus.len();
    if n < 3 {
        return Err(Error::invalid(format!("cannot split {n} pairs into three non-empty parts")));
    }
    let n_valid = (valid * n as f64 + 1e-9).floor() as usize;
    let n_test = (test * n as f64 + 1e-9).floor() as usize;
    if n_valid == 0 || n_test == 0 {
        return Err(Error::invalid(format!(
            "{n} pairs are too few for fractions ({train}, {valid}, {test}): a split would be empty"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng_for(seed, "split"));
    let pick = |range: &[usize]| -> Vec<BitextPair> {
        let mut idx = range.to_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| corpus.pairs[i].clone()).collect()
    };
    let mk = |suffix: &str, pairs| Corpus {
        name: format!("{}.{suffix}", corpus.name),
        domain_tag: corpus.domain_tag,
        pairs,
    };
    Ok(Splits {
        valid: mk("valid", pick(&order[..n_valid])),
        test: mk("test", pick(&order[n_valid..n_valid + n_test])),
        train: mk("train", pick(&order[n_valid + n_test..])),
    })
}
