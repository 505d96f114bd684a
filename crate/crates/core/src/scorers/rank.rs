use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Direction, Method, ScoreRecord};
use crate::error::{Error, Result};

/// Pair ids ordered best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub method: Method,
    pub direction: Direction,
    pub order: Vec<usize>,
    /// Score of `order[i]`.
    pub values: Vec<f64>,
}

impl Ranking {
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Writes `rank, pair_id, value` rows after a `# method direction` header.
    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let dir = match self.direction {
            Direction::HigherIsBetter => "higher_is_better",
            Direction::LowerIsBetter => "lower_is_better",
        };
        let mut body = format!("# {}\t{}\n", self.method, dir);
        for (i, (id, v)) in self.order.iter().zip(&self.values).enumerate() {
            body.push_str(&format!("{i}\t{id}\t{v}\n"));
        }
        w.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_tsv(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::EmptyCorpus(format!("empty ranking file {}", path.display())))?
            .map_err(|e| Error::io(path, e))?;
        let head: Vec<&str> = header.trim_start_matches("# ").split('\t').collect();
        if head.len() != 2 {
            return Err(Error::Parse { line: 1, msg: "expected '# method<TAB>direction' header".into() });
        }
        let method: Method = head[0].parse()?;
        let direction = match head[1] {
            "higher_is_better" => Direction::HigherIsBetter,
            "lower_is_better" => Direction::LowerIsBetter,
            d => return Err(Error::Parse { line: 1, msg: format!("unknown direction '{d}'") }),
        };
        let (mut order, mut values) = (Vec::new(), Vec::new());
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let cols: Vec<&str> = line.split('\t').collect();
            let err = |msg: String| Error::Parse { line: i + 2, msg };
            if cols.len() != 3 {
                return Err(err(format!("expected 3 columns, found {}", cols.len())));
            }
            order.push(cols[1].parse().map_err(|e| err(format!("bad id: {e}")))?);
            values.push(cols[2].parse().map_err(|e| err(format!("bad value: {e}")))?);
        }
        Ok(Ranking { method, direction, order, values })
    }
}

/// `floor(frac * n)`, tolerant of representation error in `frac`.
pub fn frac_count(frac: f64, n: usize) -> usize {
    ((frac * n as f64) + 1e-9).floor() as usize
}

/// Stable best-first sort; equal values are ordered by ascending id.
pub fn rank(records: &[ScoreRecord], direction: Direction) -> Result<Ranking> {
    let mut seen = HashSet::with_capacity(records.len());
    for r in records {
        if !seen.insert(r.pair_id) {
            return Err(Error::invalid(format!("duplicate score for pair {}", r.pair_id)));
        }
        if !r.value.is_finite() {
            return Err(Error::invalid(format!("non-finite score for pair {}", r.pair_id)));
        }
    }
    let method = records.first().map_or(Method::Prediction, |r| r.method);
    let mut sorted: Vec<&ScoreRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        let by_value = match direction {
            Direction::HigherIsBetter => b.value.total_cmp(&a.value),
            Direction::LowerIsBetter => a.value.total_cmp(&b.value),
        };
        by_value.then(a.pair_id.cmp(&b.pair_id))
    });
    Ok(Ranking {
        method,
        direction,
        order: sorted.iter().map(|r| r.pair_id).collect(),
        values: sorted.iter().map(|r| r.value).collect(),
    })
}

/// The first `max(1, floor(p * N))` ids of the ranking.
pub fn top_fraction(r: &Ranking, p: f64) -> Result<Vec<usize>> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid(format!("top fraction must be in (0,1], got {p}")));
    }
    if r.is_empty() {
        return Err(Error::Selection("cannot select from an empty ranking".into()));
    }
    let k = frac_count(p, r.len()).max(1);
    Ok(r.order[..k].to_vec())
}
