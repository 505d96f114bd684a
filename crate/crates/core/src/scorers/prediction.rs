use rayon::prelude::*;

use super::{Method, ScoreRecord};
use crate::corpus::Corpus;
use crate::nmt::{EncodedCorpus, ScoreMean, TranslationModel};

/// Prediction scores of the current model for every pair. Runs in parallel;
/// results are identical to a sequential pass.
pub fn score_encoded_prediction(model: &TranslationModel, data: &EncodedCorpus, mean: ScoreMean) -> Vec<ScoreRecord> {
    data.pairs
        .par_iter()
        .map(|ex| ScoreRecord {
            pair_id: ex.id,
            value: model.prediction_score_encoded(ex, mean),
            method: Method::Prediction,
        })
        .collect()
}

pub fn score_corpus_prediction(model: &TranslationModel, corpus: &Corpus, mean: ScoreMean) -> Vec<ScoreRecord> {
    score_encoded_prediction(model, &model.encode_corpus(corpus), mean)
}
