//! The full comparison: one warm-up, three external rankings, and every
//! fine-tuning strategy run from the same warm-up checkpoint.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{CurriculumConfig, ScorerConfig, Strategy, TrainConfig};
use super::experiment::{Datasets, Experiment, RunOutcome};
use super::scheduler::SchedulerSpec;
use super::window::{write_selection_log, WindowSpec};
use crate::corpus::{load_any_tsv, synth_generate, Corpus, DomainTag, NoiseFractions, OracleLabel, SynthSpec, TokenMapping};
use crate::error::{Error, Result};
use crate::eval::{emit_report, overlap_matrix, RunReport};
use crate::scorers::{top_fraction, EmbeddingProvider, Method, Ranking, TokenTable};
use crate::seed;

/// Which pairs the fine-tuning strategies select from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pool {
    /// D_d is the whole general corpus.
    General,
    /// D_d is the in-domain part of the general corpus; held-out sets are in-domain.
    InDomain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SuiteData {
    /// Generated corpora. Held-out sets and the language-model text are
    /// clean draws with seeds derived from `spec.seed`.
    Synthetic { spec: SynthSpec, pool: Pool, valid_pairs: usize, test_pairs: usize, lm_pairs: usize },
    /// Labeled or plain TSV corpora and a word2vec token table.
    Files {
        general: String,
        /// D_d; the general corpus when absent.
        in_domain: Option<String>,
        valid: String,
        test: String,
        lm_in_domain: Option<String>,
        embeddings: String,
    },
}

impl Default for SuiteData {
    fn default() -> Self {
        SuiteData::Synthetic {
            spec: SynthSpec {
                n_pairs: 50_000,
                vocab_size_src: 500,
                vocab_size_tgt: 500,
                mapping_seed: 1,
                noise_fracs: NoiseFractions { misaligned: 0.3, ..Default::default() },
                in_domain_frac: 0.3,
                len_range: [4, 12],
                seed: 1,
                zipf_exponent: 0.7,
            },
            pool: Pool::InDomain,
            valid_pairs: 400,
            test_pairs: 500,
            lm_pairs: 5000,
        }
    }
}

fn held_out(spec: &SynthSpec, label: &str, n: usize, in_domain: bool) -> Result<Corpus> {
    let mut s = spec.clone();
    s.n_pairs = n;
    s.noise_fracs = NoiseFractions::default();
    s.seed = seed::derive(spec.seed, label);
    if in_domain {
        s.in_domain_frac = 1.0;
    }
    let tag = if in_domain { DomainTag::InDomain } else { DomainTag::General };
    Ok(synth_generate(&s)?.corpus.with_name(label).with_domain_tag(tag))
}

impl SuiteData {
    /// The experiment's corpora and, for synthetic data, the token bijection.
    pub fn load(&self) -> Result<(Datasets, Option<TokenMapping>)> {
        match self {
            SuiteData::Synthetic { spec, pool, valid_pairs, test_pairs, lm_pairs } => {
                let synth = synth_generate(spec)?;
                let general = synth.corpus;
                let in_domain_eval = *pool == Pool::InDomain;
                let in_domain = match pool {
                    Pool::General => general.clone(),
                    Pool::InDomain => general.in_domain_subset(),
                };
                let data = Datasets {
                    valid: held_out(spec, "valid", *valid_pairs, in_domain_eval)?,
                    test: held_out(spec, "test", *test_pairs, in_domain_eval)?,
                    lm_in_domain: Some(held_out(spec, "lm_in_domain", *lm_pairs, true)?),
                    general,
                    in_domain,
                };
                Ok((data, Some(synth.mapping)))
            }
            SuiteData::Files { general, in_domain, valid, test, lm_in_domain, .. } => {
                let general = load_any_tsv(Path::new(general))?;
                let in_domain = match in_domain {
                    Some(p) => load_any_tsv(Path::new(p))?,
                    None => general.clone(),
                };
                let lm_in_domain = lm_in_domain.as_deref().map(|p| load_any_tsv(Path::new(p))).transpose()?;
                let data = Datasets {
                    general,
                    in_domain,
                    valid: load_any_tsv(Path::new(valid))?,
                    test: load_any_tsv(Path::new(test))?,
                    lm_in_domain,
                };
                Ok((data, None))
            }
        }
    }
}

/// Everything a suite run depends on. Its JSON form is the snapshot a rerun starts from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub seed: u64,
    pub train: TrainConfig,
    pub scorers: ScorerConfig,
    pub p: f64,
    pub hybrid_top: f64,
    pub hybrid_discard: f64,
    pub static_window: WindowSpec,
    pub expand_window: WindowSpec,
    pub shrink_window: WindowSpec,
    pub data: SuiteData,
    /// Adds a no-warm-up run on the DCCE top subset with the two-stage update budget.
    pub ablation: bool,
    pub svg: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        let base = CurriculumConfig::for_strategy(Strategy::TraditionalFt, 1);
        Self {
            seed: base.seed,
            train: base.train,
            scorers: base.scorers,
            p: base.p,
            hybrid_top: base.hybrid_top,
            hybrid_discard: base.hybrid_discard,
            static_window: WindowSpec::default_static(),
            expand_window: WindowSpec::dynamic(SchedulerSpec::default_expansion()),
            shrink_window: WindowSpec::dynamic(SchedulerSpec::default_shrink()),
            data: SuiteData::default(),
            ablation: false,
            svg: true,
        }
    }
}

impl SuiteConfig {
    /// The per-run config the suite uses for `strategy`.
    pub fn strategy_config(&self, strategy: Strategy) -> CurriculumConfig {
        let mut cfg = CurriculumConfig::for_strategy(strategy, self.seed);
        cfg.train = self.train.clone();
        cfg.scorers = self.scorers.clone();
        cfg.p = self.p;
        cfg.hybrid_top = self.hybrid_top;
        cfg.hybrid_discard = self.hybrid_discard;
        cfg.window = match strategy {
            Strategy::OnlineStatic => Some(self.static_window),
            Strategy::OnlineExpand => Some(self.expand_window),
            Strategy::OnlineShrink => Some(self.shrink_window),
            _ => None,
        };
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        for s in [Strategy::TraditionalFt, Strategy::OnlineStatic, Strategy::OnlineExpand, Strategy::OnlineShrink] {
            self.strategy_config(s).validate()?;
        }
        if let SuiteData::Synthetic { spec, valid_pairs, test_pairs, lm_pairs, .. } = &self.data {
            spec.validate()?;
            if *valid_pairs == 0 || *test_pairs == 0 || *lm_pairs == 0 {
                return Err(Error::Config("valid_pairs, test_pairs and lm_pairs must be >= 1".into()));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Oracle-label composition of a ranking's top subset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsetQuality {
    pub size: usize,
    pub clean_frac: f64,
    pub in_domain_frac: f64,
}

/// Clean and in-domain shares of the top `p` of `ranking`; `None` unless
/// every selected pair of `corpus` carries both oracle labels.
pub fn subset_quality(corpus: &Corpus, ranking: &Ranking, p: f64) -> Result<Option<SubsetQuality>> {
    let by_id: std::collections::HashMap<usize, _> = corpus.pairs().iter().map(|q| (q.id, q)).collect();
    let ids = top_fraction(ranking, p)?;
    let (mut clean, mut in_domain) = (0usize, 0usize);
    for id in &ids {
        let pair = by_id.get(id).ok_or_else(|| Error::invalid(format!("ranked id {id} is not in the corpus")))?;
        match (pair.oracle, pair.domain) {
            (Some(label), Some(domain)) => {
                clean += (label == OracleLabel::Clean) as usize;
                in_domain += (domain == DomainTag::InDomain) as usize;
            }
            _ => return Ok(None),
        }
    }
    let n = ids.len() as f64;
    Ok(Some(SubsetQuality { size: ids.len(), clean_frac: clean as f64 / n, in_domain_frac: in_domain as f64 / n }))
}

/// The token table synthetic experiments score CSLS with.
pub fn synthetic_embeddings(seed: u64, scorers: &ScorerConfig, mapping: &TokenMapping) -> Result<TokenTable> {
    let seed = seed::derive(seed, "embeddings");
    TokenTable::aligned_random(mapping.entries(), scorers.embedding_dim, scorers.embedding_noise, seed)
}

/// What a suite run produced, in report order.
#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub reports: Vec<RunReport>,
    pub rankings: Vec<Ranking>,
    pub files: Vec<PathBuf>,
}

pub const SNAPSHOT_FILE: &str = "effective_config.json";

fn named(strategy: &str) -> impl FnOnce(Error) -> Error + '_ {
    move |e| Error::Suite { strategy: strategy.to_owned(), source: Box::new(e) }
}

/// Runs the converged baseline, traditional fine-tuning, the three
/// deterministic curricula, the three online curricula and the hybrid (and
/// the ablation when enabled) into `out_dir`. The effective config is
/// written first; rerunning from it reproduces every file except
/// `timings.csv` byte for byte.
pub fn run_suite(cfg: &SuiteConfig, out_dir: &Path) -> Result<SuiteOutcome> {
    cfg.validate()?;
    let mkdir = |d: &Path| fs::create_dir_all(d).map_err(|e| Error::io(d, e));
    let (rank_dir, sel_dir) = (out_dir.join("rankings"), out_dir.join("selections"));
    for d in [out_dir, &rank_dir, &sel_dir] {
        mkdir(d)?;
    }
    let snapshot = out_dir.join(SNAPSHOT_FILE);
    fs::write(&snapshot, cfg.to_json() + "\n").map_err(|e| Error::io(&snapshot, e))?;
    let mut files = vec![snapshot];

    let (data, mapping) = cfg.data.load()?;
    let exp = Experiment::new(cfg.strategy_config(Strategy::TraditionalFt), data)?;
    let base = exp.run_warmup().map_err(named("warmup"))?;
    let ckpt = out_dir.join("warmup.ckpt");
    base.save(&ckpt)?;
    files.push(ckpt);

    let provider = match (&cfg.data, mapping) {
        (_, Some(m)) => synthetic_embeddings(cfg.seed, &cfg.scorers, &m)?,
        (SuiteData::Files { embeddings, .. }, None) => TokenTable::load(Path::new(embeddings))?,
        (SuiteData::Synthetic { .. }, None) => unreachable!("synthetic data always has a mapping"),
    };
    let csls = exp.csls_ranking(&EmbeddingProvider::Tokens(provider)).map_err(named("laser_csls scoring"))?;
    let (fwd, bwd) = exp.train_dcce_models().map_err(named("dcce scoring"))?;
    let dcce = exp.dcce_ranking(&fwd, &bwd).map_err(named("dcce scoring"))?;
    let lms = exp.train_mml_models().map_err(named("mml scoring"))?;
    let mml = exp.mml_ranking(&lms).map_err(named("mml scoring"))?;
    let rankings = vec![csls, dcce, mml];

    let mut quality = String::from("method,p,size,clean_frac,in_domain_frac\n");
    let mut has_quality = false;
    for r in &rankings {
        let path = rank_dir.join(format!("{}.tsv", r.method));
        r.write_tsv(&path)?;
        files.push(path);
        if let Some(q) = subset_quality(&exp.data.in_domain, r, cfg.p)? {
            has_quality = true;
            quality.push_str(&format!("{},{},{},{},{}\n", r.method, cfg.p, q.size, q.clean_frac, q.in_domain_frac));
        }
    }
    if has_quality {
        let path = out_dir.join("scorer_quality.csv");
        fs::write(&path, quality).map_err(|e| Error::io(&path, e))?;
        files.push(path);
    }
    let named_rankings: Vec<(String, Ranking)> = rankings.iter().map(|r| (r.method.to_string(), r.clone())).collect();
    let grid: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    let overlap = out_dir.join("overlap.csv");
    overlap_matrix(&named_rankings, &grid)?.write_csv(&overlap)?;
    files.push(overlap);

    let mut outcomes: Vec<RunOutcome> = Vec::new();
    let mut run = |name: &str, f: &dyn Fn() -> Result<RunOutcome>| -> Result<u64> {
        let out = f().map_err(named(name))?;
        let total = out.report.total_updates;
        outcomes.push(out);
        Ok(total)
    };
    run(Strategy::ConvergedBaseline.name(), &|| exp.run_converged_baseline(&base))?;
    run(Strategy::TraditionalFt.name(), &|| exp.run_traditional_ft(&base))?;
    let mut dcce_updates = 0;
    for r in &rankings {
        let total = run(&format!("deterministic_{}", r.method), &|| exp.run_deterministic(&base, r))?;
        if r.method == Method::Dcce {
            dcce_updates = total;
        }
    }
    for (s, w) in [
        (Strategy::OnlineStatic, cfg.static_window),
        (Strategy::OnlineExpand, cfg.expand_window),
        (Strategy::OnlineShrink, cfg.shrink_window),
    ] {
        run(s.name(), &|| exp.run_window(&base, s.name(), w))?;
    }
    let refs: Vec<&Ranking> = rankings.iter().collect();
    run(Strategy::Hybrid.name(), &|| exp.run_hybrid(&base, &refs))?;
    if cfg.ablation {
        let budget = cfg.train.warmup_updates + dcce_updates;
        run("no_warmup_dcce", &|| exp.run_no_warmup(&rankings[1], cfg.p, budget))?;
    }

    for o in &outcomes {
        let log = sel_dir.join(format!("{}.tsv", o.report.strategy));
        let ids = sel_dir.join(format!("{}.ids.tsv", o.report.strategy));
        write_selection_log(&o.selections, &log, Some(&ids))?;
        files.extend([log, ids]);
    }
    let reports: Vec<RunReport> = outcomes.into_iter().map(|o| o.report).collect();
    files.extend(emit_report(&reports, out_dir, cfg.svg)?);
    Ok(SuiteOutcome { reports, rankings, files })
}

/// Reruns the suite recorded in `snapshot_dir` into `out_dir`.
pub fn rerun_suite(snapshot_dir: &Path, out_dir: &Path) -> Result<SuiteOutcome> {
    let path = snapshot_dir.join(SNAPSHOT_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    run_suite(&SuiteConfig::from_json(&text)?, out_dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_round_trips_through_json() {
        let cfg = SuiteConfig::default();
        assert_eq!(SuiteConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn strategy_configs_carry_the_suite_windows() {
        let mut cfg = SuiteConfig::default();
        cfg.static_window = WindowSpec::Static { discard_easy: 0.2, discard_hard: 0.1 };
        let s = cfg.strategy_config(Strategy::OnlineStatic);
        assert_eq!(s.window, Some(cfg.static_window));
        s.validate().unwrap();
        assert_eq!(cfg.strategy_config(Strategy::Hybrid).window, None);
    }

    #[test]
    fn mismatched_window_is_rejected() {
        let mut cfg = SuiteConfig::default();
        cfg.static_window = cfg.expand_window;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn held_out_sets_are_clean_and_in_domain_on_request() {
        let data = SuiteData::Synthetic {
            spec: SynthSpec { n_pairs: 200, noise_fracs: NoiseFractions { misaligned: 0.5, ..Default::default() }, in_domain_frac: 0.5, ..Default::default() },
            pool: Pool::InDomain,
            valid_pairs: 30,
            test_pairs: 40,
            lm_pairs: 50,
        };
        let (d, mapping) = data.load().unwrap();
        assert!(mapping.is_some());
        assert_eq!((d.valid.len(), d.test.len(), d.in_domain.len()), (30, 40, 100));
        for c in [&d.valid, &d.test, d.lm_in_domain.as_ref().unwrap()] {
            assert!(c.pairs().iter().all(|p| p.oracle == Some(OracleLabel::Clean) && p.domain == Some(DomainTag::InDomain)));
        }
        assert_ne!(d.valid.pairs()[0].src, d.test.pairs()[0].src);
    }

    #[test]
    fn subset_quality_counts_labels() {
        let mut spec = SynthSpec { n_pairs: 100, in_domain_frac: 0.3, ..Default::default() };
        spec.noise_fracs.misaligned = 0.2;
        let c = synth_generate(&spec).unwrap().corpus;
        let order: Vec<usize> = c.ids();
        let r = Ranking { method: Method::Dcce, direction: Method::Dcce.direction(), values: vec![0.0; order.len()], order };
        let q = subset_quality(&c, &r, 1.0).unwrap().unwrap();
        assert_eq!(q.size, 100);
        assert!((q.clean_frac - 0.8).abs() < 1e-12 && (q.in_domain_frac - 0.3).abs() < 1e-12);
    }
}
