//! Cross-domain similarity local scaling.

use rayon::prelude::*;

use super::embed::EmbeddingProvider;
use super::{Method, ScoreRecord};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::nmt::kernels::dot;

pub const DEFAULT_CSLS_K: usize = 10;

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b) / (dot(a, a).sqrt() * dot(b, b).sqrt())
}

/// Mean of the `k` largest values (destroys the order of `sims`).
fn top_k_mean(sims: &mut [f64], k: usize) -> f64 {
    let n = sims.len();
    if k < n {
        sims.select_nth_unstable_by(k - 1, |a, b| b.total_cmp(a));
    }
    let mut top = sims[..k].to_vec();
    top.sort_by(|a, b| b.total_cmp(a));
    top.iter().sum::<f64>() / k as f64
}

fn check_k(k: usize, pool: usize) -> Result<()> {
    if k == 0 || k > pool {
        return Err(Error::invalid(format!("CSLS k = {k} must be in [1, {pool}] for this pool")));
    }
    Ok(())
}

/// `2 cos(x, y) - r_Y(x) - r_X(y)`, where `r_Y(x)` is the mean cosine of `x`
/// to its `k` nearest neighbours in `y_pool` (and symmetrically for `r_X`).
pub fn csls_score(x: &[f64], y: &[f64], x_pool: &[Vec<f64>], y_pool: &[Vec<f64>], k: usize) -> Result<f64> {
    check_k(k, x_pool.len().min(y_pool.len()))?;
    let dim = x.len();
    if y.len() != dim || x_pool.iter().chain(y_pool).any(|v| v.len() != dim) {
        return Err(Error::invalid("CSLS vectors must share one dimension"));
    }
    let mut sx: Vec<f64> = y_pool.iter().map(|v| cosine(x, v)).collect();
    let mut sy: Vec<f64> = x_pool.iter().map(|v| cosine(y, v)).collect();
    Ok(2.0 * cosine(x, y) - top_k_mean(&mut sx, k) - top_k_mean(&mut sy, k))
}

/// `r_Y(x_i)` for every `x_i` in `queries` against `pool`. Inputs must be unit length.
pub fn neighborhood_means(queries: &[Vec<f64>], pool: &[Vec<f64>], k: usize) -> Result<Vec<f64>> {
    check_k(k, pool.len())?;
    Ok(queries
        .par_iter()
        .map(|q| {
            let mut sims: Vec<f64> = pool.iter().map(|v| dot(q, v)).collect();
            top_k_mean(&mut sims, k)
        })
        .collect())
}

/// Scores every pair against the full source and target pools. Exact, O(N^2).
pub fn score_corpus_csls(corpus: &Corpus, provider: &EmbeddingProvider, k: usize) -> Result<Vec<ScoreRecord>> {
    let (xs, ys) = provider.embed_corpus(corpus)?;
    let rx = neighborhood_means(&xs, &ys, k)?;
    let ry = neighborhood_means(&ys, &xs, k)?;
    Ok(corpus
        .pairs()
        .iter()
        .enumerate()
        .map(|(i, p)| ScoreRecord {
            pair_id: p.id,
            value: 2.0 * dot(&xs[i], &ys[i]) - rx[i] - ry[i],
            method: Method::LaserCsls,
        })
        .collect())
}
