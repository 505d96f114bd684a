use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochReport {
    pub epoch: usize,
    pub selected_size: usize,
    pub window_size_frac: f64,
    /// Trainer update count at the end of the epoch.
    pub update: u64,
    pub valid_bleu: f64,
}

/// Outcome of one training strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub strategy: String,
    /// Mean fraction of the selection pool trained on per epoch.
    pub data_used: f64,
    pub epochs: Vec<EpochReport>,
    /// Trainer update count when the run started.
    pub start_update: u64,
    /// Updates performed by the run: the trainer's update-count delta.
    pub total_updates: u64,
    /// Updates from the start of the run to its best validation checkpoint.
    pub updates_to_best: u64,
    pub best_valid_bleu: f64,
    /// Test BLEU of the best validation checkpoint.
    pub best_test_bleu: f64,
    /// Not serialized: it would break bit-exact reruns.
    #[serde(skip)]
    pub wall_time_secs: f64,
}

/// One row of the comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub strategy: String,
    pub data_used: f64,
    pub epochs: usize,
    pub start_update: u64,
    pub total_updates: u64,
    pub updates_to_best: u64,
    pub best_valid_bleu: f64,
    pub test_bleu: f64,
}

const HEADER: &str = "strategy,data_used,epochs,start_update,total_updates,updates_to_best,best_valid_bleu,test_bleu";

fn comparison_csv(reports: &[RunReport]) -> String {
    let mut out = format!("{HEADER}\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.strategy,
            r.data_used,
            r.epochs.len(),
            r.start_update,
            r.total_updates,
            r.updates_to_best,
            r.best_valid_bleu,
            r.best_test_bleu
        ));
    }
    out
}

fn epochs_csv(reports: &[RunReport]) -> String {
    let mut out = String::from("strategy,epoch,selected_size,window_size_frac,update,valid_bleu\n");
    for r in reports {
        for e in &r.epochs {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.strategy, e.epoch, e.selected_size, e.window_size_frac, e.update, e.valid_bleu
            ));
        }
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Horizontal bars of total updates, one per run in input order.
fn updates_svg(reports: &[RunReport]) -> String {
    let (label_w, bar_w, row_h) = (170.0, 420.0, 26.0);
    let width = label_w + bar_w + 160.0;
    let height = row_h * reports.len() as f64 + 40.0;
    let max = reports.iter().map(|r| r.total_updates).max().unwrap_or(1).max(1) as f64;
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <text x=\"4\" y=\"16\">Total updates (test BLEU)</text>\n"
    );
    for (i, r) in reports.iter().enumerate() {
        let y = 28.0 + i as f64 * row_h;
        let w = bar_w * r.total_updates as f64 / max;
        out.push_str(&format!(
            "<text x=\"4\" y=\"{:.1}\">{}</text>\n<rect x=\"{label_w}\" y=\"{y:.1}\" width=\"{w:.1}\" height=\"{:.1}\" fill=\"#4a7ab5\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\">{} ({:.2})</text>\n",
            y + 14.0,
            escape(&r.strategy),
            row_h - 6.0,
            label_w + w + 6.0,
            y + 14.0,
            r.total_updates,
            r.best_test_bleu
        ));
    }
    out.push_str("</svg>\n");
    out
}

/// Writes `comparison.csv` (one row per run, input order), `epochs.csv`,
/// `timings.csv` and, when `svg` is set, `updates.svg` into `dir`.
/// Existing files are overwritten. Returns the paths written.
pub fn emit_report(reports: &[RunReport], dir: &Path, svg: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = vec![
        (dir.join("comparison.csv"), comparison_csv(reports)),
        (dir.join("epochs.csv"), epochs_csv(reports)),
    ];
    let mut timings = String::from("strategy,wall_time_secs\n");
    for r in reports {
        timings.push_str(&format!("{},{:.3}\n", r.strategy, r.wall_time_secs));
    }
    files.push((dir.join("timings.csv"), timings));
    if svg {
        files.push((dir.join("updates.svg"), updates_svg(reports)));
    }
    for (path, body) in &files {
        fs::write(path, body).map_err(|e| Error::io(path, e))?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

pub fn read_comparison_csv(path: &Path) -> Result<Vec<ComparisonRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some(HEADER) {
        return Err(Error::Parse { line: 1, msg: format!("expected header '{HEADER}'") });
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let err = |msg: String| Error::Parse { line: i + 2, msg };
            let c: Vec<&str> = line.split(',').collect();
            if c.len() != 8 {
                return Err(err(format!("expected 8 columns, found {}", c.len())));
            }
            let f = |s: &str| s.parse::<f64>().map_err(|e| err(format!("bad number '{s}': {e}")));
            let u = |s: &str| s.parse::<u64>().map_err(|e| err(format!("bad count '{s}': {e}")));
            Ok(ComparisonRow {
                strategy: c[0].to_owned(),
                data_used: f(c[1])?,
                epochs: u(c[2])? as usize,
                start_update: u(c[3])?,
                total_updates: u(c[4])?,
                updates_to_best: u(c[5])?,
                best_valid_bleu: f(c[6])?,
                test_bleu: f(c[7])?,
            })
        })
        .collect()
}
