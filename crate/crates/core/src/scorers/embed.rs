//! Sentence embeddings standing in for a pretrained multilingual encoder.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::seed;

const UNK_TOKEN: &str = "<unk>";

/// Token vectors shared by both languages; sentences are mean-pooled.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
    unk: Option<Vec<f64>>,
}

impl TokenTable {
    pub fn new(dim: usize, entries: impl IntoIterator<Item = (String, Vec<f64>)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("embedding dimension must be >= 1"));
        }
        let mut vectors = HashMap::new();
        let mut unk = None;
        for (tok, v) in entries {
            check_vector(&v, dim, &tok)?;
            if tok == UNK_TOKEN {
                unk = Some(v);
            } else {
                vectors.insert(tok, v);
            }
        }
        Ok(Self { dim, vectors, unk })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn with_unknown(mut self, v: Vec<f64>) -> Result<Self> {
        check_vector(&v, self.dim, UNK_TOKEN)?;
        self.unk = Some(v);
        Ok(self)
    }

    /// Random table where each (source, target) token pair shares a base
    /// vector, perturbed independently by `noise`. Parallel sentences then
    /// embed close together.
    pub fn aligned_random(
        pairs: impl IntoIterator<Item = (String, String)>,
        dim: usize,
        noise: f64,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = seed::rng_for(seed, "embeddings");
        let mut entries = Vec::new();
        for (s, t) in pairs {
            let base: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for tok in [s, t] {
                let v = base.iter().map(|b| b + noise * rng.gen_range(-1.0..1.0)).collect();
                entries.push((tok, v));
            }
        }
        Self::new(dim, entries)
    }

    /// word2vec text format: a `count dim` header, then `token v1 .. vdim` per line.
    pub fn load(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse { line: 1, msg: "missing 'count dim' header".into() })?
            .map_err(|e| Error::io(path, e))?;
        let head: Vec<usize> = header
            .split_whitespace()
            .map(|x| x.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse { line: 1, msg: format!("bad header: {e}") })?;
        let [count, dim] = head[..] else {
            return Err(Error::Parse { line: 1, msg: "header must be 'count dim'".into() });
        };
        let mut entries = Vec::with_capacity(count);
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let tok = parts.next().unwrap_or_default().to_owned();
            let v: Vec<f64> = parts
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse { line: i + 2, msg: format!("bad component: {e}") })?;
            if v.len() != dim {
                return Err(Error::Parse { line: i + 2, msg: format!("expected {dim} components, found {}", v.len()) });
            }
            entries.push((tok, v));
        }
        if entries.len() != count {
            return Err(Error::Parse {
                line: 1,
                msg: format!("header declares {count} vectors, file has {}", entries.len()),
            });
        }
        Self::new(dim, entries)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut toks: Vec<(&String, &Vec<f64>)> = self.vectors.iter().collect();
        toks.sort_by(|a, b| a.0.cmp(b.0));
        let unk = self.unk.as_ref().map(|v| (UNK_TOKEN, v));
        let mut body = format!("{} {}\n", toks.len() + unk.is_some() as usize, self.dim);
        for (t, v) in toks.iter().map(|(t, v)| (t.as_str(), *v)).chain(unk) {
            body.push_str(t);
            for x in v {
                body.push_str(&format!(" {x}"));
            }
            body.push('\n');
        }
        w.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Precomputed per-sentence vectors, line-aligned with a named corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceVectors {
    pub corpus_name: String,
    pub dim: usize,
    pub src: Vec<Vec<f64>>,
    pub tgt: Vec<Vec<f64>>,
}

impl SentenceVectors {
    fn read_file(path: &Path) -> Result<Vec<Vec<f64>>> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut out = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let v: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse { line: i + 1, msg: format!("bad component: {e}") })?;
            if v.iter().all(|x| *x == 0.0) {
                return Err(Error::Parse { line: i + 1, msg: "zero sentence vector".into() });
            }
            out.push(v);
        }
        Ok(out)
    }

    /// One vector per line for each side.
    pub fn load(corpus_name: impl Into<String>, src_path: &Path, tgt_path: &Path) -> Result<Self> {
        let src = Self::read_file(src_path)?;
        let tgt = Self::read_file(tgt_path)?;
        let dim = src.first().map_or(0, Vec::len);
        for (i, v) in src.iter().chain(&tgt).enumerate() {
            check_vector(v, dim, &format!("line {}", i + 1))?;
        }
        Ok(Self { corpus_name: corpus_name.into(), dim, src, tgt })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EmbeddingProvider {
    Tokens(TokenTable),
    Sentences(SentenceVectors),
}

impl EmbeddingProvider {
    pub fn dim(&self) -> usize {
        match self {
            EmbeddingProvider::Tokens(t) => t.dim,
            EmbeddingProvider::Sentences(s) => s.dim,
        }
    }

    /// Unit-length (source, target) vectors for every pair of `corpus`.
    pub fn embed_corpus(&self, corpus: &Corpus) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        match self {
            EmbeddingProvider::Tokens(t) => {
                let src = corpus.pairs().iter().map(|p| embed_tokens(t, &p.src)).collect::<Result<_>>()?;
                let tgt = corpus.pairs().iter().map(|p| embed_tokens(t, &p.tgt)).collect::<Result<_>>()?;
                Ok((src, tgt))
            }
            EmbeddingProvider::Sentences(s) => {
                if s.src.len() != corpus.len() || s.tgt.len() != corpus.len() {
                    return Err(Error::Alignment { src: s.src.len().min(s.tgt.len()), tgt: corpus.len() });
                }
                Ok((s.src.iter().map(|v| normalized(v)).collect(), s.tgt.iter().map(|v| normalized(v)).collect()))
            }
        }
    }
}

fn check_vector(v: &[f64], dim: usize, what: &str) -> Result<()> {
    if v.len() != dim {
        return Err(Error::invalid(format!("vector for '{what}' has {} components, expected {dim}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid(format!("vector for '{what}' has non-finite components")));
    }
    if v.iter().all(|x| *x == 0.0) {
        return Err(Error::invalid(format!("vector for '{what}' is zero")));
    }
    Ok(())
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / norm).collect()
}

fn embed_tokens(table: &TokenTable, sentence: &[String]) -> Result<Vec<f64>> {
    if sentence.is_empty() {
        return Err(Error::invalid("cannot embed an empty sentence"));
    }
    let mut sum = vec![0.0; table.dim];
    let mut n = 0usize;
    for tok in sentence {
        let v = table.vectors.get(tok).or(table.unk.as_ref());
        if let Some(v) = v {
            sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::invalid(format!(
            "every token of '{}' is unknown and the table has no unknown vector",
            sentence.join(" ")
        )));
    }
    sum.iter_mut().for_each(|s| *s /= n as f64);
    if sum.iter().all(|x| *x == 0.0) {
        return Err(Error::invalid(format!("'{}' pools to a zero vector", sentence.join(" "))));
    }
    Ok(normalized(&sum))
}

/// Mean-pooled, L2-normalized sentence vector from a token table.
pub fn sentence_embed(provider: &EmbeddingProvider, sentence: &[String]) -> Result<Vec<f64>> {
    match provider {
        EmbeddingProvider::Tokens(t) => embed_tokens(t, sentence),
        EmbeddingProvider::Sentences(_) => {
            Err(Error::invalid("precomputed sentence vectors cannot embed arbitrary sentences"))
        }
    }
}
