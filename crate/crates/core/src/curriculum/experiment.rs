use std::collections::HashSet;
use std::time::Instant;

use super::config::{CurriculumConfig, Strategy};
use super::window::{hybrid_candidates, select_static_window, EpochSelection, WindowSpec};
use crate::corpus::{build_vocab, Corpus, DomainTag, Side, Vocab};
use crate::error::{Error, Result};
use crate::eval::{model_bleu, EpochReport, RunReport};
use crate::lm::{train_ngram, NGramLanguageModel};
use crate::nmt::{
    train_updates, AdamConfig, Checkpoint, EarlyStopping, EncodedCorpus,
    EvalPoint, Stage, TrainerState, TranslationModel,
};
use crate::scorers::{
    rank, score_corpus_csls, score_corpus_dcce, score_corpus_mml, score_encoded_prediction, top_fraction, Direction,
    EmbeddingProvider, Method, MmlModels, Ranking,
};
use crate::seed;

#[derive(Debug, Clone, Copy)]
struct LoopSpec {
    /// Fine-tuning learning rate; `None` continues the optimizer untouched.
    reset_lr: Option<f64>,
    max_epochs: usize,
    cap: u64,
    patience: usize,
    stage: Stage,
}

/// The corpora one experiment runs on.
#[derive(Debug, Clone)]
pub struct Datasets {
    /// D_g: warm-up and converged-baseline training data.
    pub general: Corpus,
    /// D_d: the fine-tuning pool; its ids must be ids of `general`.
    pub in_domain: Corpus,
    pub valid: Corpus,
    pub test: Corpus,
    /// Text for the in-domain language models of MML; `in_domain` when absent.
    pub lm_in_domain: Option<Corpus>,
}

/// A finished run: its best checkpoint and what happened on the way.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub checkpoint: Checkpoint,
    pub report: RunReport,
    pub selections: Vec<EpochSelection>,
    /// Validation BLEU after every evaluation, starting with the initial model.
    pub valid_curve: Vec<EvalPoint>,
}

/// Vocabularies, data and configuration shared by every run of an experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub cfg: CurriculumConfig,
    pub data: Datasets,
    src_vocab: Vocab,
    tgt_vocab: Vocab,
}

impl Experiment {
    pub fn new(cfg: CurriculumConfig, data: Datasets) -> Result<Self> {
        cfg.validate()?;
        for (name, c) in [("general", &data.general), ("in-domain", &data.in_domain), ("valid", &data.valid), ("test", &data.test)]
        {
            if c.is_empty() {
                return Err(Error::EmptyCorpus(format!("{name} corpus is empty")));
            }
        }
        let general_ids: HashSet<usize> = data.general.pairs().iter().map(|p| p.id).collect();
        if data.in_domain.pairs().iter().any(|p| !general_ids.contains(&p.id)) {
            return Err(Error::invalid("in-domain pairs must be a subset of the general corpus"));
        }
        let src_vocab = build_vocab(&data.general, Side::Source, cfg.train.min_count)?;
        let tgt_vocab = build_vocab(&data.general, Side::Target, cfg.train.min_count)?;
        Ok(Self { cfg, data, src_vocab, tgt_vocab })
    }

    pub fn src_vocab(&self) -> &Vocab {
        &self.src_vocab
    }

    pub fn tgt_vocab(&self) -> &Vocab {
        &self.tgt_vocab
    }

    /// Errors unless `model` was built over this experiment's vocabularies,
    /// in either direction.
    pub fn check_model(&self, model: &TranslationModel) -> Result<()> {
        let same = |a: &Vocab, b: &Vocab| a.regular_tokens() == b.regular_tokens();
        let (s, t) = (model.src_vocab(), model.tgt_vocab());
        if (same(s, &self.src_vocab) && same(t, &self.tgt_vocab)) || (same(s, &self.tgt_vocab) && same(t, &self.src_vocab)) {
            Ok(())
        } else {
            Err(Error::VocabMismatch("model vocabularies differ from those built from the general corpus".into()))
        }
    }

    fn seed(&self, label: &str) -> u64 {
        seed::derive(self.cfg.seed, label)
    }

    fn fresh(&self, label: &str, reversed: bool) -> Result<(TranslationModel, TrainerState)> {
        let t = &self.cfg.train;
        let (sv, tv) = if reversed {
            (self.tgt_vocab.clone(), self.src_vocab.clone())
        } else {
            (self.src_vocab.clone(), self.tgt_vocab.clone())
        };
        let model = TranslationModel::new(sv, tv, t.dim, self.seed(&format!("{label}.model")))?;
        let state =
            TrainerState::new(&model, AdamConfig::with_lr(t.lr), t.batch_size, t.clip_norm, self.seed(&format!("{label}.batches")))?;
        Ok((model, state))
    }

    pub fn valid_bleu(&self, model: &TranslationModel) -> Result<f64> {
        Ok(model_bleu(model, &self.data.valid, self.cfg.train.smoothing)?.score)
    }

    pub fn test_bleu(&self, model: &TranslationModel) -> Result<f64> {
        Ok(model_bleu(model, &self.data.test, self.cfg.train.smoothing)?.score)
    }

    /// Stage one: exactly K updates on the general corpus from a seeded initialization.
    pub fn run_warmup(&self) -> Result<Checkpoint> {
        let (mut model, mut state) = self.fresh("warmup", false)?;
        let data = model.encode_corpus(&self.data.general);
        train_updates(&mut model, &mut state, &data, self.cfg.train.warmup_updates)?;
        Ok(Checkpoint::new(model, state, Stage::Warmup))
    }

    /// One DCCE translation model trained on the general corpus; `reversed`
    /// gives the target-to-source model.
    pub fn train_scorer_model(&self, reversed: bool) -> Result<Checkpoint> {
        let k = self.cfg.scorers.dcce_updates.unwrap_or(self.cfg.train.warmup_updates);
        let (label, corpus) = if reversed {
            ("dcce.bwd", self.data.general.reversed())
        } else {
            ("dcce.fwd", self.data.general.clone())
        };
        let (mut model, mut state) = self.fresh(label, reversed)?;
        let data = model.encode_corpus(&corpus);
        train_updates(&mut model, &mut state, &data, k)?;
        Ok(Checkpoint::new(model, state, Stage::Warmup))
    }

    /// Forward and backward translation models for DCCE.
    pub fn train_dcce_models(&self) -> Result<(TranslationModel, TranslationModel)> {
        Ok((self.train_scorer_model(false)?.model, self.train_scorer_model(true)?.model))
    }

    pub fn dcce_ranking(&self, fwd: &TranslationModel, bwd: &TranslationModel) -> Result<Ranking> {
        let records = score_corpus_dcce(&self.data.in_domain, fwd, bwd, self.cfg.scorers.entropy)?;
        rank(&records, Method::Dcce.direction())
    }

    /// In-domain and general n-gram models for both sides.
    pub fn train_mml_models(&self) -> Result<[NGramLanguageModel; 4]> {
        let s = &self.cfg.scorers;
        let in_text = self.data.lm_in_domain.as_ref().unwrap_or(&self.data.in_domain);
        let lm = |c: &Corpus, side: Side, vocab: &Vocab, domain: DomainTag| {
            train_ngram(c, side, s.lm_order, vocab, s.lm_discount, domain)
        };
        Ok([
            lm(in_text, Side::Source, &self.src_vocab, DomainTag::InDomain)?,
            lm(&self.data.general, Side::Source, &self.src_vocab, DomainTag::General)?,
            lm(in_text, Side::Target, &self.tgt_vocab, DomainTag::InDomain)?,
            lm(&self.data.general, Side::Target, &self.tgt_vocab, DomainTag::General)?,
        ])
    }

    pub fn mml_ranking(&self, lms: &[NGramLanguageModel; 4]) -> Result<Ranking> {
        let models = MmlModels { src_in: &lms[0], src_gen: &lms[1], tgt_in: &lms[2], tgt_gen: &lms[3] };
        let records = score_corpus_mml(&self.data.in_domain, models, self.cfg.scorers.entropy)?;
        rank(&records, Method::Mml.direction())
    }

    pub fn csls_ranking(&self, provider: &EmbeddingProvider) -> Result<Ranking> {
        let records = score_corpus_csls(&self.data.in_domain, provider, self.cfg.scorers.csls_k)?;
        rank(&records, Method::LaserCsls.direction())
    }

    fn check_ranking(&self, r: &Ranking) -> Result<()> {
        let ids: HashSet<usize> = self.data.in_domain.pairs().iter().map(|p| p.id).collect();
        if r.len() != ids.len() || r.order.iter().any(|id| !ids.contains(id)) {
            return Err(Error::invalid(format!("the {} ranking does not cover the in-domain corpus", r.method)));
        }
        Ok(())
    }

    fn top_subset(&self, ranking: &Ranking, p: f64) -> Result<Vec<usize>> {
        self.check_ranking(ranking)?;
        let ids = top_fraction(ranking, p)?;
        if ids.len() < self.cfg.train.batch_size {
            return Err(Error::Selection(format!(
                "top {p} of {} pairs is {} pairs, less than one batch of {}",
                ranking.len(),
                ids.len(),
                self.cfg.train.batch_size
            )));
        }
        Ok(ids)
    }

    /// Ranks `pool` by the current model's prediction scores.
    fn prediction_ranking(&self, model: &TranslationModel, pool: &EncodedCorpus) -> Result<(Ranking, Vec<f64>)> {
        let records = score_encoded_prediction(model, pool, self.cfg.train.score_mean);
        let values: Vec<f64> = records.iter().map(|r| r.value).collect();
        Ok((rank(&records, Direction::HigherIsBetter)?, values))
    }

    /// Stage two. Restarts the optimizer, then trains epoch by epoch on the
    /// subset `select` picks from the epoch-start model, evaluating every
    /// `eval_interval` updates until patience, `max_epochs` or the update cap.
    fn finetune(
        &self,
        base: &Checkpoint,
        name: &str,
        pool: &EncodedCorpus,
        select: impl FnMut(usize, &TranslationModel) -> Result<EpochSelection>,
    ) -> Result<RunOutcome> {
        let t = &self.cfg.train;
        let spec = LoopSpec {
            reset_lr: Some(t.finetune_lr),
            max_epochs: t.max_epochs,
            cap: t.max_finetune_updates.unwrap_or(u64::MAX),
            patience: t.patience,
            stage: Stage::Finetuned,
        };
        self.train_loop(name, base.model.clone(), base.state.clone(), pool, spec, select)
    }

    fn train_loop(
        &self,
        name: &str,
        mut model: TranslationModel,
        mut state: TrainerState,
        pool: &EncodedCorpus,
        spec: LoopSpec,
        mut select: impl FnMut(usize, &TranslationModel) -> Result<EpochSelection>,
    ) -> Result<RunOutcome> {
        let clock = Instant::now();
        let t = &self.cfg.train;
        if let Some(lr) = spec.reset_lr {
            state.reset_for_finetune(lr);
        }
        let start = state.update_count();
        let cap = spec.cap;
        let mut stopper = EarlyStopping::new(spec.patience)?;
        let mut last = self.valid_bleu(&model)?;
        stopper.observe(EvalPoint { update: start, score: last }, || model.clone());
        let (mut epochs, mut selections) = (Vec::new(), Vec::new());
        let mut since_eval = 0;
        let (mut stop, mut patience_fired) = (false, false);
        for epoch in 0..spec.max_epochs {
            let sel = select(epoch, &model)?;
            let data = pool.select(&sel.selected_ids);
            let per_pass = state.batches_per_pass(data.len());
            let mut done = 0;
            while done < per_pass {
                let used = state.update_count() - start;
                if used >= cap {
                    stop = true;
                    break;
                }
                let k = (t.eval_interval - since_eval).min(per_pass - done).min(cap - used);
                train_updates(&mut model, &mut state, &data, k)?;
                done += k;
                since_eval += k;
                if since_eval == t.eval_interval {
                    since_eval = 0;
                    last = self.valid_bleu(&model)?;
                    if stopper.observe(EvalPoint { update: state.update_count(), score: last }, || model.clone()) {
                        stop = true;
                        patience_fired = true;
                        break;
                    }
                }
            }
            epochs.push(EpochReport {
                epoch,
                selected_size: sel.selected_ids.len(),
                window_size_frac: sel.window_size_frac,
                update: state.update_count(),
                valid_bleu: last,
            });
            selections.push(sel);
            if stop || state.update_count() - start >= cap {
                break;
            }
        }
        if since_eval > 0 && !patience_fired {
            let score = self.valid_bleu(&model)?;
            stopper.observe(EvalPoint { update: state.update_count(), score }, || model.clone());
        }
        let total_updates = state.update_count() - start;
        let valid_curve = stopper.history.clone();
        let (best, best_model) = stopper.into_best().expect("initial evaluation recorded");
        let pool_len = pool.len() as f64;
        let data_used = selections.iter().map(|s| s.selected_ids.len() as f64 / pool_len).sum::<f64>()
            / selections.len().max(1) as f64;
        let report = RunReport {
            strategy: name.to_owned(),
            data_used,
            epochs,
            start_update: start,
            total_updates,
            updates_to_best: best.update - start,
            best_valid_bleu: best.score,
            best_test_bleu: self.test_bleu(&best_model)?,
            wall_time_secs: clock.elapsed().as_secs_f64(),
        };
        // The checkpoint keeps the best weights with the final counter and optimizer state.
        let checkpoint = Checkpoint::new(best_model, state, spec.stage);
        Ok(RunOutcome { checkpoint, report, selections, valid_curve })
    }

    fn pool(&self, base: &Checkpoint) -> EncodedCorpus {
        base.model.encode_corpus(&self.data.in_domain)
    }

    /// Fine-tunes on the fixed top `p` of an external ranking.
    pub fn run_deterministic(&self, base: &Checkpoint, ranking: &Ranking) -> Result<RunOutcome> {
        let ids = self.top_subset(ranking, self.cfg.p)?;
        let frac = ids.len() as f64 / ranking.len() as f64;
        let name = format!("deterministic_{}", ranking.method);
        self.finetune(base, &name, &self.pool(base), |epoch, _| Ok(EpochSelection::new(epoch, ids.clone(), frac, &[])))
    }

    /// Each epoch, ranks the pool by the current model's
    /// prediction scores and trains on the configured window.
    pub fn run_online(&self, base: &Checkpoint) -> Result<RunOutcome> {
        let window = self
            .cfg
            .window
            .ok_or_else(|| Error::Config("online fine-tuning needs a window".into()))?;
        self.run_window(base, self.cfg.strategy.name(), window)
    }

    pub fn run_window(&self, base: &Checkpoint, name: &str, window: WindowSpec) -> Result<RunOutcome> {
        window.validate()?;
        let pool = self.pool(base);
        self.finetune(base, name, &pool, |epoch, model| {
            let (ranking, values) = self.prediction_ranking(model, &pool)?;
            let (ids, frac) = window.select(&ranking, epoch as u32)?;
            Ok(EpochSelection::new(epoch, ids, frac, &values))
        })
    }

    /// Intersect the top subsets of the external rankings, then apply a
    /// static prediction-score window to that candidate set every epoch.
    pub fn run_hybrid(&self, base: &Checkpoint, rankings: &[&Ranking]) -> Result<RunOutcome> {
        for r in rankings {
            self.check_ranking(r)?;
        }
        let candidates = hybrid_candidates(rankings, self.cfg.hybrid_top)?;
        let pool = self.pool(base).select(&candidates);
        let n_pool = self.data.in_domain.len() as f64;
        let d = self.cfg.hybrid_discard;
        self.finetune(base, Strategy::Hybrid.name(), &self.pool(base), |epoch, model| {
            let (ranking, values) = self.prediction_ranking(model, &pool)?;
            let ids = select_static_window(&ranking, d, d)?;
            let frac = ids.len() as f64 / n_pool;
            Ok(EpochSelection::new(epoch, ids, frac, &values))
        })
    }

    /// Fine-tune on all of D_d with the same reset and stopping rule.
    pub fn run_traditional_ft(&self, base: &Checkpoint) -> Result<RunOutcome> {
        let ids = self.data.in_domain.ids();
        self.finetune(base, Strategy::TraditionalFt.name(), &self.pool(base), |epoch, _| {
            Ok(EpochSelection::new(epoch, ids.clone(), 1.0, &[]))
        })
    }

    /// Continues the warm-up model on all of D_g without an optimizer reset
    /// until patience fires or the converged budget (warm-up included) is spent.
    pub fn run_converged_baseline(&self, base: &Checkpoint) -> Result<RunOutcome> {
        let t = &self.cfg.train;
        let budget = t.converged_updates.saturating_sub(base.state.update_count());
        let pool = base.model.encode_corpus(&self.data.general);
        let ids = self.data.general.ids();
        let spec = LoopSpec { reset_lr: None, max_epochs: usize::MAX, cap: budget, patience: t.patience, stage: Stage::Converged };
        self.train_loop(Strategy::ConvergedBaseline.name(), base.model.clone(), base.state.clone(), &pool, spec, |epoch, _| {
            Ok(EpochSelection::new(epoch, ids.clone(), 1.0, &[]))
        })
    }

    /// Trains a freshly initialized model on the top `p` of `ranking` for
    /// exactly `updates` updates, keeping the best validation checkpoint.
    pub fn run_no_warmup(&self, ranking: &Ranking, p: f64, updates: u64) -> Result<RunOutcome> {
        let ids = self.top_subset(ranking, p)?;
        let frac = ids.len() as f64 / ranking.len() as f64;
        let (model, state) = self.fresh("no_warmup", false)?;
        let pool = model.encode_corpus(&self.data.in_domain);
        let spec = LoopSpec { reset_lr: None, max_epochs: usize::MAX, cap: updates, patience: usize::MAX, stage: Stage::Finetuned };
        let name = format!("no_warmup_{}", ranking.method);
        self.train_loop(&name, model, state, &pool, spec, |epoch, _| Ok(EpochSelection::new(epoch, ids.clone(), frac, &[])))
    }

    /// Runs `cfg.strategy` from a warm-up checkpoint. External rankings are
    /// looked up by method as the strategy needs them.
    pub fn run_strategy(&self, base: &Checkpoint, rankings: &[Ranking]) -> Result<RunOutcome> {
        let find = |m: Method| {
            rankings
                .iter()
                .find(|r| r.method == m)
                .ok_or_else(|| Error::Config(format!("strategy {} needs a {m} ranking", self.cfg.strategy.name())))
        };
        match self.cfg.strategy {
            Strategy::ConvergedBaseline => self.run_converged_baseline(base),
            Strategy::TraditionalFt => self.run_traditional_ft(base),
            Strategy::Deterministic => self.run_deterministic(base, find(self.cfg.scorer.unwrap_or(Method::Dcce))?),
            Strategy::OnlineStatic | Strategy::OnlineExpand | Strategy::OnlineShrink => self.run_online(base),
            Strategy::Hybrid => {
                let rs = [find(Method::LaserCsls)?, find(Method::Dcce)?, find(Method::Mml)?];
                self.run_hybrid(base, &rs)
            }
            Strategy::NoWarmup => {
                let updates = self.cfg.train.max_finetune_updates.unwrap_or(self.cfg.train.converged_updates);
                self.run_no_warmup(find(self.cfg.scorer.unwrap_or(Method::Dcce))?, self.cfg.p, updates)
            }
        }
    }
}
