//! Two-stage curriculum training: warm-up on all data, then fine-tuning on
//! subsets chosen once by an external scorer or every epoch by the model's
//! own prediction scores.

mod config;
mod experiment;
mod scheduler;
mod suite;
mod window;

pub use config::{apply_overrides, parse_override, CurriculumConfig, DataPaths, ScorerConfig, Strategy, TrainConfig};
pub use experiment::{Datasets, Experiment, RunOutcome};
pub use suite::{rerun_suite, run_suite, subset_quality, synthetic_embeddings, Pool, SubsetQuality, SuiteConfig, SuiteData, SuiteOutcome, SNAPSHOT_FILE};
pub use scheduler::{scheduler_eval, SchedulerLaw, SchedulerSpec, WindowMode};
pub use window::{
    dynamic_window_positions, hybrid_candidates, select_dynamic_window, select_static_window, write_selection_log,
    Anchor, EpochSelection, WindowSpec,
};
