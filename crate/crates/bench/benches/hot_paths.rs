use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use curricula::corpus::{build_vocab, synth_generate, NoiseFractions, Side, SynthSpec};
use curricula::eval::{corpus_bleu, Smoothing};
use curricula::nmt::{train_updates, AdamConfig, ScoreMean, TrainerState, TranslationModel};
use curricula::scorers::{score_corpus_csls, score_corpus_dcce, score_encoded_prediction, EmbeddingProvider, EntropyMode, TokenTable};

fn spec(n: usize) -> SynthSpec {
    SynthSpec {
        n_pairs: n,
        vocab_size_src: 200,
        vocab_size_tgt: 200,
        noise_fracs: NoiseFractions { misaligned: 0.3, ..Default::default() },
        len_range: [4, 12],
        ..Default::default()
    }
}

fn model_for(n: usize) -> (curricula::corpus::Corpus, TranslationModel) {
    let synth = synth_generate(&spec(n)).unwrap();
    let c = synth.corpus;
    let sv = build_vocab(&c, Side::Source, 1).unwrap();
    let tv = build_vocab(&c, Side::Target, 1).unwrap();
    let model = TranslationModel::new(sv, tv, 32, 7).unwrap();
    (c, model)
}

fn training(c: &mut Criterion) {
    let (corpus, model) = model_for(2000);
    let data = model.encode_corpus(&corpus);
    c.bench_function("train_update_b32_d32_v200", |b| {
        let mut m = model.clone();
        let mut state = TrainerState::new(&m, AdamConfig::with_lr(1e-3), 32, 1.0, 3).unwrap();
        b.iter(|| train_updates(&mut m, &mut state, &data, 1).unwrap())
    });
    c.bench_function("prediction_scores_2000_pairs", |b| {
        b.iter(|| score_encoded_prediction(black_box(&model), &data, ScoreMean::Arithmetic))
    });
}

fn scorers(c: &mut Criterion) {
    let synth = synth_generate(&spec(2000)).unwrap();
    let table = TokenTable::aligned_random(synth.mapping.entries(), 32, 0.5, 5).unwrap();
    let provider = EmbeddingProvider::Tokens(table);
    c.bench_function("csls_2000_pairs_k10", |b| b.iter(|| score_corpus_csls(&synth.corpus, &provider, 10).unwrap()));
    let (corpus, fwd) = model_for(2000);
    let bwd = TranslationModel::new(fwd.tgt_vocab().clone(), fwd.src_vocab().clone(), 32, 8).unwrap();
    c.bench_function("dcce_2000_pairs", |b| {
        b.iter(|| score_corpus_dcce(&corpus, &fwd, &bwd, EntropyMode::PerToken).unwrap())
    });
}

fn bleu(c: &mut Criterion) {
    let corpus = synth_generate(&spec(500)).unwrap().corpus;
    let refs: Vec<Vec<String>> = corpus.pairs().iter().map(|p| p.tgt.clone()).collect();
    let hyps: Vec<Vec<String>> = corpus.pairs().iter().map(|p| p.tgt[..p.tgt.len() - 1].to_vec()).collect();
    c.bench_function("corpus_bleu_500", |b| b.iter(|| corpus_bleu(black_box(&hyps), &refs, Smoothing::AddOne).unwrap()));
}

criterion_group!(benches, training, scorers, bleu);
criterion_main!(benches);
