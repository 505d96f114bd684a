use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::scheduler::{SchedulerSpec, WindowMode};
use super::window::WindowSpec;
use crate::error::{Error, Result};
use crate::eval::Smoothing;
use crate::nmt::ScoreMean;
use crate::scorers::{EntropyMode, Method};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    ConvergedBaseline,
    TraditionalFt,
    Deterministic,
    OnlineStatic,
    OnlineExpand,
    OnlineShrink,
    Hybrid,
    /// Trains from scratch on a scorer's top subset; no warm-up stage.
    NoWarmup,
}

impl Strategy {
    pub const ALL: [Strategy; 8] = [
        Strategy::ConvergedBaseline,
        Strategy::TraditionalFt,
        Strategy::Deterministic,
        Strategy::OnlineStatic,
        Strategy::OnlineExpand,
        Strategy::OnlineShrink,
        Strategy::Hybrid,
        Strategy::NoWarmup,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::ConvergedBaseline => "converged_baseline",
            Strategy::TraditionalFt => "traditional_ft",
            Strategy::Deterministic => "deterministic",
            Strategy::OnlineStatic => "online_static",
            Strategy::OnlineExpand => "online_expand",
            Strategy::OnlineShrink => "online_shrink",
            Strategy::Hybrid => "hybrid",
            Strategy::NoWarmup => "no_warmup",
        }
    }

    /// The window an online strategy uses when none is configured.
    pub fn default_window(self) -> Option<WindowSpec> {
        match self {
            Strategy::OnlineStatic => Some(WindowSpec::default_static()),
            Strategy::OnlineExpand => Some(WindowSpec::dynamic(SchedulerSpec::default_expansion())),
            Strategy::OnlineShrink => Some(WindowSpec::dynamic(SchedulerSpec::default_shrink())),
            _ => None,
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Strategy::ALL.iter().map(|x| x.name()).collect();
                Error::Config(format!("unknown strategy '{s}' (expected one of {})", names.join(", ")))
            })
    }
}

/// Model and optimizer settings shared by every stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub dim: usize,
    pub min_count: usize,
    pub batch_size: usize,
    pub clip_norm: f64,
    pub lr: f64,
    /// Learning rate after the optimizer reset at the start of fine-tuning.
    pub finetune_lr: f64,
    /// K: warm-up updates on the general corpus.
    pub warmup_updates: u64,
    /// Update budget of the converged baseline, warm-up included.
    pub converged_updates: u64,
    pub eval_interval: u64,
    pub patience: usize,
    /// Fine-tuning epochs; one epoch is one pass over the selected subset.
    pub max_epochs: usize,
    /// Optional cap on fine-tuning updates.
    pub max_finetune_updates: Option<u64>,
    pub smoothing: Smoothing,
    pub score_mean: ScoreMean,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dim: 32,
            min_count: 1,
            batch_size: 32,
            clip_norm: 5.0,
            lr: 5e-3,
            finetune_lr: 1e-3,
            warmup_updates: 3500,
            converged_updates: 10_000,
            eval_interval: 200,
            patience: 5,
            max_epochs: 20,
            max_finetune_updates: None,
            smoothing: Smoothing::AddOne,
            score_mean: ScoreMean::Arithmetic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScorerConfig {
    pub csls_k: usize,
    /// Updates for each DCCE translation model; defaults to the warm-up K.
    pub dcce_updates: Option<u64>,
    pub entropy: EntropyMode,
    pub lm_order: usize,
    pub lm_discount: f64,
    /// Synthetic embedding table: dimension and per-language perturbation.
    pub embedding_dim: usize,
    pub embedding_noise: f64,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        Self {
            csls_k: crate::scorers::DEFAULT_CSLS_K,
            dcce_updates: None,
            entropy: EntropyMode::PerToken,
            lm_order: crate::lm::DEFAULT_ORDER,
            lm_discount: crate::lm::DEFAULT_DISCOUNT,
            embedding_dim: 32,
            embedding_noise: 0.5,
        }
    }
}

/// Input and output locations. All optional; commands check what they need.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataPaths {
    pub general: Option<String>,
    pub in_domain: Option<String>,
    pub valid: Option<String>,
    pub test: Option<String>,
    /// Text the in-domain language models are trained on; defaults to `in_domain`.
    pub lm_in_domain: Option<String>,
    pub embeddings: Option<String>,
    pub out_dir: Option<String>,
}

/// One curriculum run, serialized as the run's effective-config snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurriculumConfig {
    pub strategy: Strategy,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub scorers: ScorerConfig,
    /// External scorer for the deterministic and no-warm-up strategies.
    #[serde(default)]
    pub scorer: Option<Method>,
    /// Top fraction for the deterministic and no-warm-up strategies.
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub window: Option<WindowSpec>,
    /// Per-scorer top fraction intersected by the hybrid strategy.
    #[serde(default = "default_hybrid_top")]
    pub hybrid_top: f64,
    /// Easy and hard shares the hybrid drops each epoch.
    #[serde(default = "default_hybrid_discard")]
    pub hybrid_discard: f64,
    #[serde(default)]
    pub data: DataPaths,
}

fn default_p() -> f64 {
    0.4
}

fn default_hybrid_top() -> f64 {
    0.5
}

fn default_hybrid_discard() -> f64 {
    0.1
}

impl CurriculumConfig {
    /// A config with every strategy-specific field at its default.
    pub fn for_strategy(strategy: Strategy, seed: u64) -> Self {
        let scorer = match strategy {
            Strategy::Deterministic | Strategy::NoWarmup => Some(Method::Dcce),
            _ => None,
        };
        Self {
            strategy,
            seed,
            train: TrainConfig::default(),
            scorers: ScorerConfig::default(),
            scorer,
            p: default_p(),
            window: strategy.default_window(),
            hybrid_top: default_hybrid_top(),
            hybrid_discard: default_hybrid_discard(),
            data: DataPaths::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.train;
        let bad = |msg: String| Err(Error::Config(msg));
        if t.dim < 2 || t.batch_size == 0 || t.eval_interval == 0 || t.patience == 0 || t.max_epochs == 0 {
            return bad("train.dim >= 2 and batch_size, eval_interval, patience, max_epochs >= 1 are required".into());
        }
        if t.warmup_updates == 0 {
            return bad("train.warmup_updates (K) must be >= 1".into());
        }
        if t.converged_updates < t.warmup_updates {
            return bad("train.converged_updates must be >= train.warmup_updates".into());
        }
        if !(t.lr >= 0.0 && t.finetune_lr >= 0.0 && t.clip_norm >= 0.0) {
            return bad("learning rates and clip_norm must be >= 0".into());
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return bad(format!("p must be in (0,1], got {}", self.p));
        }
        if !(self.hybrid_top > 0.0 && self.hybrid_top <= 1.0) || !(0.0..0.5).contains(&self.hybrid_discard) {
            return bad("hybrid_top must be in (0,1] and hybrid_discard in [0,0.5)".into());
        }
        if self.scorers.csls_k == 0 || self.scorers.lm_order == 0 || self.scorers.embedding_dim == 0 {
            return bad("scorers.csls_k, lm_order and embedding_dim must be >= 1".into());
        }
        match self.strategy {
            Strategy::Deterministic | Strategy::NoWarmup => match self.scorer {
                Some(m) if Method::EXTERNAL.contains(&m) => {}
                Some(m) => return bad(format!("strategy {} needs an external scorer, got {m}", self.strategy.name())),
                None => return bad(format!("strategy {} needs 'scorer'", self.strategy.name())),
            },
            Strategy::OnlineStatic | Strategy::OnlineExpand | Strategy::OnlineShrink => {
                let w = self
                    .window
                    .ok_or_else(|| Error::Config(format!("strategy {} needs 'window'", self.strategy.name())))?;
                w.validate()?;
                let fits = match (self.strategy, w) {
                    (Strategy::OnlineStatic, WindowSpec::Static { .. }) => true,
                    (Strategy::OnlineExpand, WindowSpec::Dynamic { scheduler, .. }) => {
                        scheduler.mode == WindowMode::Expansion
                    }
                    (Strategy::OnlineShrink, WindowSpec::Dynamic { scheduler, .. }) => scheduler.mode == WindowMode::Shrink,
                    _ => false,
                };
                if !fits {
                    return bad(format!("window {w:?} does not match strategy {}", self.strategy.name()));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a JSON config, applies `key=value` overrides, and validates.
    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut value: Value =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        apply_overrides(&mut value, overrides)?;
        let cfg: Self = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Sets dotted keys (`train.lr`) in a JSON document. Values parse as JSON
/// when they can and are taken as strings otherwise.
pub fn apply_overrides(doc: &mut Value, overrides: &[(String, String)]) -> Result<()> {
    for (key, raw) in overrides {
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.clone()));
        let mut node = &mut *doc;
        let parts: Vec<&str> = key.split('.').collect();
        if parts.iter().any(|p| p.is_empty()) {
            return Err(Error::Config(format!("malformed override key '{key}'")));
        }
        for (i, part) in parts.iter().enumerate() {
            if node.is_null() {
                *node = Value::Object(Default::default());
            }
            let obj = node
                .as_object_mut()
                .ok_or_else(|| Error::Config(format!("override '{key}': '{}' is not an object", parts[..i].join("."))))?;
            if i + 1 == parts.len() {
                obj.insert((*part).to_owned(), value.clone());
                break;
            }
            node = obj.entry((*part).to_owned()).or_insert(Value::Null);
        }
    }
    Ok(())
}

/// Parses `key=value`.
pub fn parse_override(s: &str) -> Result<(String, String)> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_owned(), v.to_owned()))
        .ok_or_else(|| Error::Config(format!("override '{s}' must look like key=value")))
}
