use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scorers::{top_fraction, Ranking};

fn same_universe(a: &Ranking, b: &Ranking) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut x = a.order.clone();
    let mut y = b.order.clone();
    x.sort_unstable();
    y.sort_unstable();
    x == y
}

/// `100 |top_a ∩ top_b| / |top_a|` for the top `p` of each ranking.
pub fn overlap_fraction(a: &Ranking, b: &Ranking, p: f64) -> Result<f64> {
    if !same_universe(a, b) {
        return Err(Error::invalid("rankings cover different pair ids"));
    }
    overlap_unchecked(a, b, p)
}

fn overlap_unchecked(a: &Ranking, b: &Ranking, p: f64) -> Result<f64> {
    let ta = top_fraction(a, p)?;
    let tb: HashSet<usize> = top_fraction(b, p)?.into_iter().collect();
    let common = ta.iter().filter(|id| tb.contains(id)).count();
    Ok(100.0 * common as f64 / ta.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapRow {
    pub method_a: String,
    pub method_b: String,
    pub p: f64,
    pub overlap: f64,
}

/// Pairwise overlaps for every unordered pair of methods and grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapTable {
    pub methods: Vec<String>,
    pub grid: Vec<f64>,
    /// Method pairs in input order (`a` before `b`), grid-minor.
    pub rows: Vec<OverlapRow>,
}

impl OverlapTable {
    /// Overlap of `a` and `b` at grid point `p`; a method against itself is 100.
    pub fn get(&self, a: &str, b: &str, p: f64) -> Option<f64> {
        if a == b && self.methods.iter().any(|m| m == a) && self.grid.contains(&p) {
            return Some(100.0);
        }
        self.rows
            .iter()
            .find(|r| r.p == p && ((r.method_a == a && r.method_b == b) || (r.method_a == b && r.method_b == a)))
            .map(|r| r.overlap)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("method_a,method_b,p,overlap_pct\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.method_a, r.method_b, r.p, r.overlap));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

pub fn overlap_matrix(rankings: &[(String, Ranking)], grid: &[f64]) -> Result<OverlapTable> {
    if rankings.len() < 2 {
        return Err(Error::invalid("overlap analysis needs at least two rankings"));
    }
    if grid.is_empty() {
        return Err(Error::invalid("overlap grid is empty"));
    }
    for (i, (name, r)) in rankings.iter().enumerate() {
        if rankings[..i].iter().any(|(n, _)| n == name) {
            return Err(Error::invalid(format!("ranking '{name}' given twice")));
        }
        if !same_universe(&rankings[0].1, r) {
            return Err(Error::invalid(format!("ranking '{name}' covers different pair ids than '{}'", rankings[0].0)));
        }
    }
    let mut rows = Vec::new();
    for i in 0..rankings.len() {
        for j in i + 1..rankings.len() {
            for &p in grid {
                rows.push(OverlapRow {
                    method_a: rankings[i].0.clone(),
                    method_b: rankings[j].0.clone(),
                    p,
                    overlap: overlap_unchecked(&rankings[i].1, &rankings[j].1, p)?,
                });
            }
        }
    }
    Ok(OverlapTable {
        methods: rankings.iter().map(|(n, _)| n.clone()).collect(),
        grid: grid.to_vec(),
        rows,
    })
}
