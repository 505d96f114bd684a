//! BLEU, ranked-subset overlap, and run reports.

mod bleu;
mod overlap;
mod report;

pub use bleu::{corpus_bleu, decode_max_len, model_bleu, model_translations, BleuResult, Smoothing};
pub use overlap::{overlap_fraction, overlap_matrix, OverlapRow, OverlapTable};
pub use report::{emit_report, read_comparison_csv, ComparisonRow, EpochReport, RunReport};
