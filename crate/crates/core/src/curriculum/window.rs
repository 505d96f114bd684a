use std::collections::HashSet;
use std::fs;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::scheduler::{scheduler_eval, SchedulerSpec};
use crate::error::{Error, Result};
use crate::scorers::{frac_count, top_fraction, Direction, Ranking};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Anchor {
    #[default]
    BandCenter,
}

/// Which slice of a prediction-score ranking an online epoch trains on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WindowSpec {
    /// Drop a fixed share of the easiest and of the hardest pairs.
    Static { discard_easy: f64, discard_hard: f64 },
    /// A window of size `scheduler(t)` inside the `band` of rank percentiles.
    Dynamic {
        band: [f64; 2],
        scheduler: SchedulerSpec,
        #[serde(default)]
        anchor: Anchor,
    },
}

impl WindowSpec {
    pub fn default_static() -> Self {
        WindowSpec::Static { discard_easy: 0.30, discard_hard: 0.30 }
    }

    pub fn dynamic(scheduler: SchedulerSpec) -> Self {
        WindowSpec::Dynamic { band: [0.30, 0.70], scheduler, anchor: Anchor::BandCenter }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            WindowSpec::Static { discard_easy: e, discard_hard: h } => {
                if !(e >= 0.0 && h >= 0.0 && e + h < 1.0) {
                    return Err(Error::Config(format!("static window needs e, h >= 0 and e + h < 1, got {e} and {h}")));
                }
            }
            WindowSpec::Dynamic { band: [lo, hi], scheduler, .. } => {
                if !(0.0 <= lo && lo < hi && hi <= 1.0) {
                    return Err(Error::Config(format!("band [{lo}, {hi}] must satisfy 0 <= lo < hi <= 1")));
                }
                scheduler.validate()?;
                if scheduler.peak() > hi - lo + 1e-12 {
                    return Err(Error::Config(format!(
                        "scheduler peaks at {} which exceeds the band width {}",
                        scheduler.peak(),
                        hi - lo
                    )));
                }
            }
        }
        Ok(())
    }

    /// Selects epoch `t`'s ids from a prediction-score ranking. Also returns
    /// the window size fraction that was applied.
    pub fn select(&self, r: &Ranking, epoch: u32) -> Result<(Vec<usize>, f64)> {
        match *self {
            WindowSpec::Static { discard_easy, discard_hard } => {
                let ids = select_static_window(r, discard_easy, discard_hard)?;
                let frac = ids.len() as f64 / r.len() as f64;
                Ok((ids, frac))
            }
            WindowSpec::Dynamic { band, scheduler, .. } => {
                let lambda = scheduler_eval(&scheduler, epoch);
                Ok((select_dynamic_window(r, lambda, band)?, lambda))
            }
        }
    }
}

fn require_prediction_order(r: &Ranking) -> Result<()> {
    if r.direction != Direction::HigherIsBetter {
        return Err(Error::invalid("selection windows need a higher-is-better ranking"));
    }
    Ok(())
}

/// Drops the `floor(e N)` easiest (highest-scoring) and `floor(h N)` hardest
/// ids; returns the rest in rank order.
pub fn select_static_window(r: &Ranking, e: f64, h: f64) -> Result<Vec<usize>> {
    require_prediction_order(r)?;
    if !(e >= 0.0 && h >= 0.0 && e + h < 1.0) {
        return Err(Error::invalid(format!("static window needs e, h >= 0 and e + h < 1, got {e} and {h}")));
    }
    let n = r.len();
    let (ke, kh) = (frac_count(e, n), frac_count(h, n));
    if ke + kh >= n {
        return Err(Error::Selection(format!("static window ({e}, {h}) leaves nothing of {n} pairs")));
    }
    Ok(r.order[ke..n - kh].to_vec())
}

/// Rank positions of a `floor(lambda N)` window centred on the band midpoint,
/// shifted minimally to stay inside `[floor(lo N), floor(hi N))`.
pub fn dynamic_window_positions(n: usize, lambda: f64, band: [f64; 2]) -> Result<Range<usize>> {
    let [lo, hi] = band;
    if !(0.0 <= lo && lo < hi && hi <= 1.0) {
        return Err(Error::invalid(format!("band [{lo}, {hi}] must satisfy 0 <= lo < hi <= 1")));
    }
    if !(lambda > 0.0 && lambda <= hi - lo + 1e-12) {
        return Err(Error::invalid(format!("window size {lambda} must be in (0, {}]", hi - lo)));
    }
    let k = frac_count(lambda, n);
    if k == 0 {
        return Err(Error::Selection(format!("window size {lambda} selects nothing of {n} pairs")));
    }
    let (lo_i, hi_i) = (frac_count(lo, n), frac_count(hi, n));
    if k > hi_i - lo_i {
        return Err(Error::Selection(format!("window of {k} does not fit in rank positions {lo_i}..{hi_i}")));
    }
    let centre = frac_count((lo + hi) / 2.0, n);
    let start = centre.saturating_sub(k / 2).clamp(lo_i, hi_i - k);
    Ok(start..start + k)
}

pub fn select_dynamic_window(r: &Ranking, lambda: f64, band: [f64; 2]) -> Result<Vec<usize>> {
    require_prediction_order(r)?;
    Ok(r.order[dynamic_window_positions(r.len(), lambda, band)?].to_vec())
}

/// Ids in the top `p` of every ranking, ascending.
pub fn hybrid_candidates(rankings: &[&Ranking], p: f64) -> Result<Vec<usize>> {
    let first = rankings.first().ok_or_else(|| Error::invalid("hybrid selection needs rankings"))?;
    let universe: HashSet<usize> = first.order.iter().copied().collect();
    for r in rankings {
        if r.len() != first.len() || r.order.iter().any(|id| !universe.contains(id)) {
            return Err(Error::invalid("hybrid rankings cover different pair ids"));
        }
    }
    let mut common: HashSet<usize> = top_fraction(first, p)?.into_iter().collect();
    for r in &rankings[1..] {
        let top: HashSet<usize> = top_fraction(r, p)?.into_iter().collect();
        common.retain(|id| top.contains(id));
    }
    if common.is_empty() {
        return Err(Error::Selection(format!(
            "the top {p} subsets of the rankings do not intersect; use a larger fraction"
        )));
    }
    let mut out: Vec<usize> = common.into_iter().collect();
    out.sort_unstable();
    Ok(out)
}

/// The subset one fine-tuning epoch trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochSelection {
    pub epoch: usize,
    pub selected_ids: Vec<usize>,
    pub window_size_frac: f64,
    /// Digest of `selected_ids` in order.
    pub digest: String,
    /// Digest of the scores the selection was made from (empty for fixed subsets).
    pub score_digest: String,
}

impl EpochSelection {
    pub fn new(epoch: usize, selected_ids: Vec<usize>, window_size_frac: f64, scores: &[f64]) -> Self {
        let digest = seed::digest_ids(&selected_ids);
        let score_digest = if scores.is_empty() { String::new() } else { seed::digest_f64(scores) };
        Self { epoch, selected_ids, window_size_frac, digest, score_digest }
    }
}

/// `epoch, window_size_frac, n_selected, digest, score_digest` rows; with
/// `ids_path`, also one line of comma-separated ids per epoch.
pub fn write_selection_log(selections: &[EpochSelection], path: &Path, ids_path: Option<&Path>) -> Result<()> {
    let mut out = String::from("epoch\twindow_size_frac\tn_selected\tdigest\tscore_digest\n");
    for s in selections {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            s.epoch,
            s.window_size_frac,
            s.selected_ids.len(),
            s.digest,
            if s.score_digest.is_empty() { "-" } else { &s.score_digest }
        ));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))?;
    if let Some(p) = ids_path {
        let mut ids = String::new();
        for s in selections {
            let list: Vec<String> = s.selected_ids.iter().map(usize::to_string).collect();
            ids.push_str(&format!("{}\t{}\n", s.epoch, list.join(",")));
        }
        fs::write(p, ids).map_err(|e| Error::io(p, e))?;
    }
    Ok(())
}
