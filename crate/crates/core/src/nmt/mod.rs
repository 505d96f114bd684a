//! Toy attentional translation model, its trainer and checkpoints.

mod checkpoint;
pub(crate) mod kernels;
mod model;
mod trainer;

pub use checkpoint::{Checkpoint, Stage};
pub use model::{
    prediction_score_from_logprobs, EncodedCorpus, EncodedPair, Layout, ScoreMean, TranslationModel, DEFAULT_DIM,
    INIT_RANGE,
};
pub use trainer::{
    train_pass, train_updates, train_until_converged, AdamConfig, ConvergeConfig, ConvergeOutcome, EarlyStopping,
    EvalPoint, LoaderCursor, TrainStats, TrainerState,
};
