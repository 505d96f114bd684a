//! Mini-batch Adam training with seeded, length-bucketed batching.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::model::{EncodedCorpus, TranslationModel};
use crate::error::{Error, Result};
use crate::seed;

/// Batches per length-sorting window.
const BUCKET_BATCHES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_beta1() -> f64 {
    0.9
}

fn default_beta2() -> f64 {
    0.999
}

fn default_eps() -> f64 {
    1e-8
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self { lr, beta1: default_beta1(), beta2: default_beta2(), eps: default_eps() }
    }
}

/// Position of the data loader: which pass over which data, and how far in.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoaderCursor {
    pub fingerprint: u64,
    pub pass: u64,
    pub position: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainerState {
    pub adam: AdamConfig,
    pub batch_size: usize,
    /// Global gradient-norm clip; 0 disables.
    pub clip_norm: f64,
    pub seed: u64,
    pub(crate) m: Vec<f64>,
    pub(crate) v: Vec<f64>,
    pub(crate) adam_step: u64,
    pub(crate) update_count: u64,
    pub(crate) loader: LoaderCursor,
}

impl TrainerState {
    pub fn new(model: &TranslationModel, adam: AdamConfig, batch_size: usize, clip_norm: f64, seed: u64) -> Result<Self> {
        if batch_size == 0 {
            return Err(Error::invalid("batch_size must be >= 1"));
        }
        if !(adam.lr >= 0.0) {
            return Err(Error::invalid(format!("learning rate must be >= 0, got {}", adam.lr)));
        }
        let n = model.params().len();
        Ok(Self {
            adam,
            batch_size,
            clip_norm,
            seed,
            m: vec![0.0; n],
            v: vec![0.0; n],
            adam_step: 0,
            update_count: 0,
            loader: LoaderCursor::default(),
        })
    }

    pub fn update_count(&self) -> u64 {
        self.update_count
    }

    pub fn loader(&self) -> LoaderCursor {
        self.loader
    }

    /// Fresh optimizer moments, learning rate and data loader; the update
    /// counter keeps running across stages.
    pub fn reset_for_finetune(&mut self, lr: f64) {
        self.adam.lr = lr;
        self.m.iter_mut().for_each(|x| *x = 0.0);
        self.v.iter_mut().for_each(|x| *x = 0.0);
        self.adam_step = 0;
        self.loader = LoaderCursor::default();
        self.seed = seed::derive(self.seed, "finetune");
    }

    /// Number of batches in one pass over `n` pairs.
    pub fn batches_per_pass(&self, n: usize) -> u64 {
        n.div_ceil(self.batch_size) as u64
    }
}

fn fingerprint(data: &EncodedCorpus) -> u64 {
    let ids: Vec<usize> = data.pairs.iter().map(|p| p.id).collect();
    let hex = seed::digest_ids(&ids);
    u64::from_str_radix(&hex, 16).expect("hex digest")
}

/// Batches (as positions into `data`) for one pass.
fn batch_plan(data: &EncodedCorpus, batch_size: usize, seed: u64, fp: u64, pass: u64) -> Vec<Vec<usize>> {
    let mut rng = seed::rng_for(seed, &format!("batches/{fp:016x}/{pass}"));
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut rng);
    let mut batches = Vec::with_capacity(data.len().div_ceil(batch_size));
    for window in order.chunks_mut(batch_size * BUCKET_BATCHES) {
        window.sort_by_key(|&i| data.pairs[i].tgt.len());
        batches.extend(window.chunks(batch_size).map(<[usize]>::to_vec));
    }
    batches.shuffle(&mut rng);
    batches
}

#[derive(Debug, Clone, Default)]
pub struct TrainStats {
    /// Mean sentence loss of each batch, in update order.
    pub batch_losses: Vec<f64>,
}

impl TrainStats {
    pub fn mean_loss(&self) -> f64 {
        self.batch_losses.iter().sum::<f64>() / self.batch_losses.len().max(1) as f64
    }
}

struct Loader {
    plan: Vec<Vec<usize>>,
    fp: u64,
}

impl Loader {
    fn sync(state: &mut TrainerState, data: &EncodedCorpus) -> Self {
        let fp = fingerprint(data);
        if state.loader.fingerprint != fp {
            state.loader = LoaderCursor { fingerprint: fp, pass: 0, position: 0 };
        }
        let plan = batch_plan(data, state.batch_size, state.seed, fp, state.loader.pass);
        Self { plan, fp }
    }

    fn next(&mut self, state: &mut TrainerState, data: &EncodedCorpus) -> Vec<usize> {
        if state.loader.position as usize >= self.plan.len() {
            state.loader.pass += 1;
            state.loader.position = 0;
            self.plan = batch_plan(data, state.batch_size, state.seed, self.fp, state.loader.pass);
        }
        let b = self.plan[state.loader.position as usize].clone();
        state.loader.position += 1;
        b
    }
}

fn apply_update(model: &mut TranslationModel, state: &mut TrainerState, grad: &mut [f64]) {
    if state.clip_norm > 0.0 {
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm > state.clip_norm {
            let s = state.clip_norm / norm;
            grad.iter_mut().for_each(|g| *g *= s);
        }
    }
    state.adam_step += 1;
    let AdamConfig { lr, beta1, beta2, eps } = state.adam;
    let t = state.adam_step as i32;
    let step = lr * (1.0 - beta2.powi(t)).sqrt() / (1.0 - beta1.powi(t));
    let params = model.params_mut();
    for i in 0..params.len() {
        let g = grad[i];
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g;
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g;
        params[i] -= step * state.m[i] / (state.v[i].sqrt() + eps);
    }
}

/// Runs exactly `k` optimizer steps. Each step minimizes the mean sentence
/// loss of one mini-batch.
pub fn train_updates(
    model: &mut TranslationModel,
    state: &mut TrainerState,
    data: &EncodedCorpus,
    k: u64,
) -> Result<TrainStats> {
    if k == 0 {
        return Err(Error::invalid("number of updates must be >= 1"));
    }
    if data.is_empty() {
        return Err(Error::EmptyCorpus("no training data".into()));
    }
    if state.m.len() != model.params().len() {
        return Err(Error::invalid("trainer state does not match the model"));
    }
    let mut loader = Loader::sync(state, data);
    let mut grad = vec![0.0; model.params().len()];
    let mut stats = TrainStats { batch_losses: Vec::with_capacity(k as usize) };
    for _ in 0..k {
        let batch = loader.next(state, data);
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        for &i in &batch {
            loss += model.loss_and_grad(&data.pairs[i], &mut grad);
        }
        let update = state.update_count + 1;
        if !loss.is_finite() {
            return Err(Error::Diverged { update });
        }
        let inv = 1.0 / batch.len() as f64;
        grad.iter_mut().for_each(|g| *g *= inv);
        apply_update(model, state, &mut grad);
        state.update_count = update;
        if !model.is_finite() {
            return Err(Error::Diverged { update });
        }
        stats.batch_losses.push(loss * inv);
    }
    Ok(stats)
}

/// Trains to the end of the current pass over `data` (a full pass when the
/// data is new to the loader). Returns the number of updates run.
pub fn train_pass(model: &mut TranslationModel, state: &mut TrainerState, data: &EncodedCorpus) -> Result<u64> {
    if data.is_empty() {
        return Err(Error::EmptyCorpus("no training data".into()));
    }
    let per_pass = state.batches_per_pass(data.len());
    let fp = fingerprint(data);
    let done = if state.loader.fingerprint == fp && state.loader.position < per_pass {
        state.loader.position
    } else {
        0
    };
    let k = per_pass - done;
    train_updates(model, state, data, k)?;
    Ok(k)
}

/// One evaluation during training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub update: u64,
    pub score: f64,
}

/// Early-stopping bookkeeping shared by every training loop: higher scores are
/// better; stop after `patience` consecutive non-improving evaluations.
#[derive(Debug, Clone)]
pub struct EarlyStopping<T> {
    pub patience: usize,
    pub history: Vec<EvalPoint>,
    best: Option<(EvalPoint, T)>,
    bad: usize,
}

impl<T> EarlyStopping<T> {
    pub fn new(patience: usize) -> Result<Self> {
        if patience == 0 {
            return Err(Error::invalid("patience must be >= 1"));
        }
        Ok(Self { patience, history: Vec::new(), best: None, bad: 0 })
    }

    /// Records an evaluation; `snapshot` is taken only on improvement.
    /// Returns true when training should stop.
    pub fn observe(&mut self, point: EvalPoint, snapshot: impl FnOnce() -> T) -> bool {
        self.history.push(point);
        match &self.best {
            Some((b, _)) if point.score <= b.score => {
                self.bad += 1;
            }
            _ => {
                self.best = Some((point, snapshot()));
                self.bad = 0;
            }
        }
        self.bad >= self.patience
    }

    pub fn best(&self) -> Option<&(EvalPoint, T)> {
        self.best.as_ref()
    }

    pub fn into_best(self) -> Option<(EvalPoint, T)> {
        self.best
    }
}

#[derive(Debug, Clone)]
pub struct ConvergeOutcome {
    pub model: TranslationModel,
    pub state: TrainerState,
    pub best: EvalPoint,
    pub history: Vec<EvalPoint>,
    /// Updates actually run by this call (past the best checkpoint when patience fired).
    pub updates_run: u64,
    pub stopped_early: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct ConvergeConfig {
    pub patience: usize,
    pub eval_interval: u64,
    /// Hard cap on updates for this call.
    pub max_updates: u64,
}

/// Trains in `eval_interval` chunks, evaluating after each, until patience
/// fires or `max_updates` is reached. Returns the best checkpoint seen.
pub fn train_until_converged(
    model: &mut TranslationModel,
    state: &mut TrainerState,
    data: &EncodedCorpus,
    cfg: ConvergeConfig,
    mut eval_fn: impl FnMut(&TranslationModel) -> f64,
) -> Result<ConvergeOutcome> {
    if cfg.eval_interval == 0 || cfg.max_updates == 0 {
        return Err(Error::invalid("eval_interval and max_updates must be >= 1"));
    }
    let mut stopper = EarlyStopping::new(cfg.patience)?;
    let start = state.update_count;
    let mut stopped_early = false;
    while state.update_count - start < cfg.max_updates {
        let k = cfg.eval_interval.min(cfg.max_updates - (state.update_count - start));
        train_updates(model, state, data, k)?;
        let point = EvalPoint { update: state.update_count, score: eval_fn(model) };
        if stopper.observe(point, || (model.clone(), state.clone())) {
            stopped_early = true;
            break;
        }
    }
    let updates_run = state.update_count - start;
    let history = stopper.history.clone();
    let (best, (best_model, best_state)) = stopper.into_best().expect("at least one evaluation");
    Ok(ConvergeOutcome { model: best_model, state: best_state, best, history, updates_run, stopped_early })
}
