//! Bitext scorers and rankings.
//!
//! Every scorer produces one [`ScoreRecord`] per pair; [`rank`] orders them
//! best-first according to the method's direction and [`top_fraction`] takes
//! the head of the ranking.

mod csls;
mod dcce;
mod embed;
mod mml;
mod prediction;
mod rank;

use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use csls::{csls_score, neighborhood_means, score_corpus_csls, DEFAULT_CSLS_K};
pub use dcce::{dcce_score, score_corpus_dcce};
pub use embed::{sentence_embed, EmbeddingProvider, SentenceVectors, TokenTable};
pub use mml::{mml_score, score_corpus_mml, MmlModels};
pub use prediction::{score_corpus_prediction, score_encoded_prediction};
pub use rank::{frac_count, rank, top_fraction, Ranking};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    LaserCsls,
    Dcce,
    Mml,
    Prediction,
}

impl Method {
    pub const EXTERNAL: [Method; 3] = [Method::LaserCsls, Method::Dcce, Method::Mml];

    pub fn name(self) -> &'static str {
        match self {
            Method::LaserCsls => "laser_csls",
            Method::Dcce => "dcce",
            Method::Mml => "mml",
            Method::Prediction => "prediction",
        }
    }

    /// Which way is better for this method's raw values.
    pub fn direction(self) -> Direction {
        match self {
            Method::LaserCsls | Method::Prediction => Direction::HigherIsBetter,
            Method::Dcce | Method::Mml => Direction::LowerIsBetter,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "laser_csls" | "laser" | "csls" => Ok(Method::LaserCsls),
            "dcce" => Ok(Method::Dcce),
            "mml" => Ok(Method::Mml),
            "prediction" => Ok(Method::Prediction),
            other => Err(Error::invalid(format!(
                "unknown scoring method '{other}' (expected laser_csls, dcce, mml or prediction)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    HigherIsBetter,
    LowerIsBetter,
}

/// Whether cross-entropies are averaged per token or summed per sentence.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyMode {
    #[default]
    PerToken,
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub pair_id: usize,
    pub value: f64,
    pub method: Method,
}

/// Writes `pair_id, method, value` rows.
pub fn write_scores(records: &[ScoreRecord], path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        writeln!(w, "{}\t{}\t{}", r.pair_id, r.method, r.value).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_scores(path: &Path) -> Result<Vec<ScoreRecord>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let cols: Vec<&str> = line.split('\t').collect();
        let err = |msg: String| Error::Parse { line: i + 1, msg };
        if cols.len() != 3 {
            return Err(err(format!("expected 3 columns, found {}", cols.len())));
        }
        out.push(ScoreRecord {
            pair_id: cols[0].parse().map_err(|e| err(format!("bad pair id: {e}")))?,
            method: cols[1].parse().map_err(|e: Error| err(e.to_string()))?,
            value: cols[2].parse().map_err(|e| err(format!("bad value: {e}")))?,
        });
    }
    Ok(out)
}
