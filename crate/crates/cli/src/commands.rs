use std::fs;
use std::path::{Path, PathBuf};

use curricula::corpus::{
    build_vocab, clean_dedup, load_any_tsv, load_parallel, split, write_labeled_tsv, Corpus, DomainTag, Side,
    SplitFractions, Tokenizer,
};
use curricula::curriculum::{
    apply_overrides, parse_override, run_suite, synthetic_embeddings, CurriculumConfig, Datasets, Experiment,
    RunOutcome, Strategy, SuiteConfig, SuiteData, WindowMode, WindowSpec, SNAPSHOT_FILE,
};
use curricula::eval::{corpus_bleu, emit_report, model_translations, overlap_matrix, RunReport, Smoothing};
use curricula::lm::{train_ngram, NGramLanguageModel};
use curricula::nmt::Checkpoint;
use curricula::scorers::{
    rank, read_scores, score_corpus_csls, score_corpus_dcce, score_corpus_mml, score_corpus_prediction, write_scores,
    EmbeddingProvider, Method, MmlModels, Ranking, TokenTable,
};
use curricula::{Error, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::{Command, ConfigArgs, DomainArg, FinetuneArgs, PrepareArgs, ScoreArgs, SideArg, TokenizerArg};

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Synth { cfg, out } => synth(&cfg, &out),
        Command::Prepare(args) => prepare(&args),
        Command::TrainWarmup { cfg, reverse, forward_scorer, out } => train_warmup(&cfg, reverse, forward_scorer, &out),
        Command::TrainConverged { cfg, base, out } => train_converged(&cfg, &base, &out),
        Command::TrainLm { cfg, side, domain, out } => train_lm(&cfg, side, domain, &out),
        Command::Score(args) => score(&args),
        Command::Rank { scores, out } => rank_scores(&scores, &out),
        Command::Finetune(args) => finetune(&args),
        Command::Evaluate { cfg, model, corpus, smoothing, out } => {
            evaluate(&cfg, &model, corpus.as_deref(), smoothing.as_deref(), &out)
        }
        Command::Overlap { methods, rankings_dir, grid, out } => overlap(&methods, &rankings_dir, &grid, &out),
        Command::Report { runs, out, svg } => report(&runs, &out, svg),
        Command::Suite { cfg, rerun, out } => suite(&cfg, rerun.as_deref(), &out),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

fn mkdir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(io_err(path))
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    write_text(path, &(serde_json::to_string_pretty(value).expect("json serializes") + "\n"))
}

/// Snapshot location: inside an output directory, or beside an output file.
fn snapshot_path(out: &Path, is_dir: bool) -> PathBuf {
    if is_dir {
        out.join(SNAPSHOT_FILE)
    } else {
        let mut name = out.file_name().unwrap_or_default().to_os_string();
        name.push(".config.json");
        out.with_file_name(name)
    }
}

fn parent_dir(file: &Path) -> Result<()> {
    match file.parent() {
        Some(p) if !p.as_os_str().is_empty() => mkdir(p),
        _ => Ok(()),
    }
}

fn write_snapshot(out: &Path, is_dir: bool, command: &str, seed: Option<u64>, inputs: Value, config: Value) -> Result<()> {
    let doc = json!({ "command": command, "seed": seed, "inputs": inputs, "config": config });
    write_json(&snapshot_path(out, is_dir), &doc)
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

/// File config (or `default`), then `--set`, then `--seed`.
fn load_value<T: Serialize + DeserializeOwned>(args: &ConfigArgs, default: T) -> Result<T> {
    let mut value = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(io_err(p))?;
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        None => serde_json::to_value(default).expect("config serializes"),
    };
    let overrides = args.set.iter().map(|s| parse_override(s)).collect::<Result<Vec<_>>>()?;
    apply_overrides(&mut value, &overrides)?;
    if let Some(seed) = args.seed {
        apply_overrides(&mut value, &[("seed".into(), seed.to_string())])?;
    }
    serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))
}

fn window_fits(strategy: Strategy, window: Option<WindowSpec>) -> bool {
    match (strategy, window) {
        (Strategy::OnlineStatic, Some(WindowSpec::Static { .. })) => true,
        (Strategy::OnlineExpand, Some(WindowSpec::Dynamic { scheduler, .. })) => scheduler.mode == WindowMode::Expansion,
        (Strategy::OnlineShrink, Some(WindowSpec::Dynamic { scheduler, .. })) => scheduler.mode == WindowMode::Shrink,
        _ => false,
    }
}

fn curriculum_config(args: &ConfigArgs, strategy: Option<Strategy>) -> Result<CurriculumConfig> {
    let default = CurriculumConfig::for_strategy(strategy.unwrap_or(Strategy::TraditionalFt), 1);
    let mut cfg = load_value(args, default)?;
    if let Some(s) = strategy {
        cfg.strategy = s;
    }
    let s = cfg.strategy;
    if s.default_window().is_some() && !window_fits(s, cfg.window) {
        cfg.window = s.default_window();
    }
    if matches!(s, Strategy::Deterministic | Strategy::NoWarmup) && cfg.scorer.is_none() {
        cfg.scorer = Some(Method::Dcce);
    }
    Ok(cfg)
}

/// Errors with every missing input named at once.
fn require(missing: Vec<&str>) -> Result<()> {
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(format!("missing required inputs: {}", missing.join(", "))))
    }
}

fn load_data(cfg: &CurriculumConfig) -> Result<Datasets> {
    let d = &cfg.data;
    let mut missing = Vec::new();
    for (key, v) in [("data.general", &d.general), ("data.valid", &d.valid), ("data.test", &d.test)] {
        if v.is_none() {
            missing.push(key);
        }
    }
    require(missing)?;
    let load = |p: &Option<String>| p.as_deref().map(|p| load_any_tsv(Path::new(p))).transpose();
    let general = load(&d.general)?.expect("checked");
    let in_domain = load(&d.in_domain)?.unwrap_or_else(|| general.clone());
    Ok(Datasets {
        valid: load(&d.valid)?.expect("checked"),
        test: load(&d.test)?.expect("checked"),
        lm_in_domain: load(&d.lm_in_domain)?,
        general,
        in_domain,
    })
}

fn load_checkpoint(exp: &Experiment, path: &Path) -> Result<Checkpoint> {
    let ckpt = Checkpoint::load(path)?;
    exp.check_model(&ckpt.model)?;
    Ok(ckpt)
}

fn synth(args: &ConfigArgs, out: &Path) -> Result<()> {
    let cfg: SuiteConfig = load_value(args, SuiteConfig::default())?;
    cfg.validate()?;
    if !matches!(cfg.data, SuiteData::Synthetic { .. }) {
        return Err(Error::Config("synth needs data.kind = synthetic".into()));
    }
    mkdir(out)?;
    let (data, mapping) = cfg.data.load()?;
    let mapping = mapping.expect("synthetic data has a mapping");
    let path = |name: &str| out.join(name);
    write_labeled_tsv(&data.general, &path("general.tsv"))?;
    write_labeled_tsv(&data.in_domain, &path("in_domain.tsv"))?;
    write_labeled_tsv(&data.valid, &path("valid.tsv"))?;
    write_labeled_tsv(&data.test, &path("test.tsv"))?;
    let lm = data.lm_in_domain.as_ref().expect("synthetic data has language-model text");
    write_labeled_tsv(lm, &path("lm_in_domain.tsv"))?;
    mapping.write_tsv(&path("mapping.tsv"))?;
    synthetic_embeddings(cfg.seed, &cfg.scorers, &mapping)?.save(&path("embeddings.vec"))?;

    // A run config pointing at the generated files, ready for the training commands.
    let mut run = cfg.strategy_config(Strategy::TraditionalFt);
    let s = |name: &str| Some(path_str(&path(name)));
    run.data.general = s("general.tsv");
    run.data.in_domain = s("in_domain.tsv");
    run.data.valid = s("valid.tsv");
    run.data.test = s("test.tsv");
    run.data.lm_in_domain = s("lm_in_domain.tsv");
    run.data.embeddings = s("embeddings.vec");
    run.save(&path("run.json"))?;
    write_json(&path(SNAPSHOT_FILE), &serde_json::to_value(&cfg).expect("config serializes"))?;
    eprintln!("wrote {} general, {} in-domain pairs to {}", data.general.len(), data.in_domain.len(), out.display());
    Ok(())
}

fn prepare(args: &PrepareArgs) -> Result<()> {
    let tokenizer = match args.tokenizer {
        TokenizerArg::Whitespace => Tokenizer::Whitespace,
        TokenizerArg::Char => Tokenizer::Char,
    };
    let raw = match (&args.src, &args.tgt, &args.tsv) {
        (Some(s), Some(t), _) => load_parallel(s, t, tokenizer)?,
        (_, _, Some(p)) => load_any_tsv(p)?,
        _ => return Err(Error::Config("prepare needs --src and --tgt, or --tsv".into())),
    };
    let (clean, stats) = clean_dedup(&raw, args.max_len)?;
    let fracs = SplitFractions { train: 1.0 - args.valid_frac - args.test_frac, valid: args.valid_frac, test: args.test_frac };
    let parts = split(&clean, fracs, args.seed)?;
    mkdir(&args.out)?;
    for (name, c) in [("train.tsv", &parts.train), ("valid.tsv", &parts.valid), ("test.tsv", &parts.test)] {
        write_labeled_tsv(c, &args.out.join(name))?;
    }
    let summary = json!({
        "input_pairs": raw.len(),
        "dropped_by_length": stats.dropped_by_length,
        "dropped_empty": stats.dropped_empty,
        "dropped_dupes": stats.dropped_dupes,
        "train": parts.train.len(),
        "valid": parts.valid.len(),
        "test": parts.test.len(),
    });
    write_json(&args.out.join("stats.json"), &summary)?;
    let inputs = json!({
        "src": args.src.as_deref().map(path_str),
        "tgt": args.tgt.as_deref().map(path_str),
        "tsv": args.tsv.as_deref().map(path_str),
    });
    let config = json!({
        "tokenizer": format!("{tokenizer:?}").to_lowercase(),
        "max_len": args.max_len,
        "split": { "train": fracs.train, "valid": fracs.valid, "test": fracs.test },
    });
    write_snapshot(&args.out, true, "prepare", Some(args.seed), inputs, config)
}

fn config_value(cfg: &CurriculumConfig) -> Value {
    serde_json::to_value(cfg).expect("config serializes")
}

fn train_warmup(args: &ConfigArgs, reverse: bool, forward_scorer: bool, out: &Path) -> Result<()> {
    let cfg = curriculum_config(args, None)?;
    cfg.validate()?;
    let exp = Experiment::new(cfg.clone(), load_data(&cfg)?)?;
    mkdir(out)?;
    let (name, ckpt) = if reverse {
        ("dcce_bwd", exp.train_scorer_model(true)?)
    } else if forward_scorer {
        ("dcce_fwd", exp.train_scorer_model(false)?)
    } else {
        ("warmup", exp.run_warmup()?)
    };
    ckpt.save(&out.join(format!("{name}.ckpt")))?;
    let mut metrics = json!({ "model": name, "updates": ckpt.state.update_count() });
    if !reverse {
        metrics["valid_bleu"] = json!(exp.valid_bleu(&ckpt.model)?);
        metrics["test_bleu"] = json!(exp.test_bleu(&ckpt.model)?);
    }
    write_json(&out.join("metrics.json"), &metrics)?;
    eprintln!("{name}: {metrics}");
    write_snapshot(out, true, "train-warmup", Some(cfg.seed), json!({ "reverse": reverse, "forward_scorer": forward_scorer }), config_value(&cfg))
}

/// Checkpoint, report, selection log and validation curve of one run.
fn write_run(out: &Path, outcome: &RunOutcome) -> Result<()> {
    mkdir(out)?;
    outcome.checkpoint.save(&out.join(format!("{}.ckpt", outcome.checkpoint.stage.name())))?;
    let report = serde_json::to_value(&outcome.report).expect("report serializes");
    write_json(&out.join("report.json"), &report)?;
    curricula::curriculum::write_selection_log(
        &outcome.selections,
        &out.join("selections.tsv"),
        Some(&out.join("selected_ids.tsv")),
    )?;
    let mut curve = String::from("update,valid_bleu\n");
    for p in &outcome.valid_curve {
        curve.push_str(&format!("{},{}\n", p.update, p.score));
    }
    write_text(&out.join("valid_curve.csv"), &curve)?;
    emit_report(std::slice::from_ref(&outcome.report), out, false)?;
    let r = &outcome.report;
    eprintln!(
        "{}: {} updates, best valid {:.2} after {}, test {:.2}",
        r.strategy, r.total_updates, r.best_valid_bleu, r.updates_to_best, r.best_test_bleu
    );
    Ok(())
}

fn train_converged(args: &ConfigArgs, base: &Path, out: &Path) -> Result<()> {
    let cfg = curriculum_config(args, Some(Strategy::ConvergedBaseline))?;
    cfg.validate()?;
    let exp = Experiment::new(cfg.clone(), load_data(&cfg)?)?;
    let base_ckpt = load_checkpoint(&exp, base)?;
    let outcome = exp.run_converged_baseline(&base_ckpt)?;
    write_run(out, &outcome)?;
    write_snapshot(out, true, "train-converged", Some(cfg.seed), json!({ "base": path_str(base) }), config_value(&cfg))
}

fn train_lm(args: &ConfigArgs, side: SideArg, domain: DomainArg, out: &Path) -> Result<()> {
    let cfg = curriculum_config(args, None)?;
    let d = &cfg.data;
    let text_path = match domain {
        DomainArg::General => d.general.as_ref(),
        DomainArg::InDomain => d.lm_in_domain.as_ref().or(d.in_domain.as_ref()),
    };
    let mut missing = Vec::new();
    if d.general.is_none() {
        missing.push("data.general");
    }
    if text_path.is_none() {
        missing.push("data.lm_in_domain or data.in_domain");
    }
    require(missing)?;
    let general = load_any_tsv(Path::new(d.general.as_ref().expect("checked")))?;
    let text = load_any_tsv(Path::new(text_path.expect("checked")))?;
    let side = match side {
        SideArg::Source => Side::Source,
        SideArg::Target => Side::Target,
    };
    let tag = match domain {
        DomainArg::General => DomainTag::General,
        DomainArg::InDomain => DomainTag::InDomain,
    };
    let vocab = build_vocab(&general, side, cfg.train.min_count)?;
    let lm = train_ngram(&text, side, cfg.scorers.lm_order, &vocab, cfg.scorers.lm_discount, tag)?;
    parent_dir(out)?;
    lm.save(out)?;
    let inputs = json!({ "side": side.name(), "domain": tag.name(), "text": text_path });
    write_snapshot(out, false, "train-lm", Some(cfg.seed), inputs, config_value(&cfg))
}

fn scored_corpus(cfg: &CurriculumConfig) -> Result<Corpus> {
    let path = cfg.data.in_domain.as_ref().or(cfg.data.general.as_ref());
    require(if path.is_none() { vec!["data.in_domain or data.general"] } else { vec![] })?;
    load_any_tsv(Path::new(path.expect("checked")))
}

fn score(args: &ScoreArgs) -> Result<()> {
    let method: Method = args.method.parse()?;
    let cfg = curriculum_config(&args.cfg, None)?;
    let embeddings = args.embeddings.clone().or_else(|| cfg.data.embeddings.as_ref().map(PathBuf::from));
    let needed: Vec<(&str, Option<&PathBuf>)> = match method {
        Method::Dcce => vec![("--fwd", args.fwd.as_ref()), ("--bwd", args.bwd.as_ref())],
        Method::Mml => vec![
            ("--lm-src-in", args.lm_src_in.as_ref()),
            ("--lm-src-gen", args.lm_src_gen.as_ref()),
            ("--lm-tgt-in", args.lm_tgt_in.as_ref()),
            ("--lm-tgt-gen", args.lm_tgt_gen.as_ref()),
        ],
        Method::LaserCsls => vec![("--embeddings (or data.embeddings)", embeddings.as_ref())],
        Method::Prediction => vec![("--model", args.model.as_ref())],
    };
    require(needed.iter().filter(|(_, p)| p.is_none()).map(|(n, _)| *n).collect())?;
    let path = |i: usize| needed[i].1.expect("checked").as_path();
    let corpus = scored_corpus(&cfg)?;
    let records = match method {
        Method::Dcce => {
            let fwd = Checkpoint::load(path(0))?.model;
            let bwd = Checkpoint::load(path(1))?.model;
            score_corpus_dcce(&corpus, &fwd, &bwd, cfg.scorers.entropy)?
        }
        Method::Mml => {
            let lms = (0..4).map(|i| NGramLanguageModel::load(path(i))).collect::<Result<Vec<_>>>()?;
            let models = MmlModels { src_in: &lms[0], src_gen: &lms[1], tgt_in: &lms[2], tgt_gen: &lms[3] };
            score_corpus_mml(&corpus, models, cfg.scorers.entropy)?
        }
        Method::LaserCsls => {
            let table = TokenTable::load(path(0))?;
            score_corpus_csls(&corpus, &EmbeddingProvider::Tokens(table), cfg.scorers.csls_k)?
        }
        Method::Prediction => {
            let model = Checkpoint::load(path(0))?.model;
            score_corpus_prediction(&model, &corpus, cfg.train.score_mean)
        }
    };
    parent_dir(&args.out)?;
    write_scores(&records, &args.out)?;
    eprintln!("scored {} pairs with {method}", records.len());
    let inputs: serde_json::Map<String, Value> =
        needed.iter().map(|(n, p)| ((*n).to_owned(), json!(p.map(|p| path_str(p))))).collect();
    let inputs = json!({ "method": method.name(), "corpus": corpus.name(), "models": inputs });
    write_snapshot(&args.out, false, "score", Some(cfg.seed), inputs, config_value(&cfg))
}

fn rank_scores(scores: &Path, out: &Path) -> Result<()> {
    let records = read_scores(scores)?;
    let method = records.first().map(|r| r.method).ok_or_else(|| Error::EmptyCorpus(path_str(scores)))?;
    if records.iter().any(|r| r.method != method) {
        return Err(Error::invalid(format!("{} mixes scoring methods", scores.display())));
    }
    let ranking = rank(&records, method.direction())?;
    parent_dir(out)?;
    ranking.write_tsv(out)?;
    write_snapshot(out, false, "rank", None, json!({ "scores": path_str(scores), "method": method.name() }), Value::Null)
}

fn needed_methods(cfg: &CurriculumConfig) -> Vec<Method> {
    match cfg.strategy {
        Strategy::Deterministic | Strategy::NoWarmup => cfg.scorer.into_iter().collect(),
        Strategy::Hybrid => Method::EXTERNAL.to_vec(),
        _ => Vec::new(),
    }
}

fn finetune(args: &FinetuneArgs) -> Result<()> {
    let strategy = args.strategy.as_deref().map(str::parse::<Strategy>).transpose()?;
    let mut cfg = curriculum_config(&args.cfg, strategy)?;
    if let Some(s) = &args.scorer {
        cfg.scorer = Some(s.parse()?);
    }
    if let Some(p) = args.p {
        cfg.p = p;
    }
    if args.discard_easy.is_some() || args.discard_hard.is_some() {
        if cfg.strategy != Strategy::OnlineStatic {
            return Err(Error::Config("--discard-easy/--discard-hard apply to online_static only".into()));
        }
        let (e0, h0) = match cfg.window {
            Some(WindowSpec::Static { discard_easy, discard_hard }) => (discard_easy, discard_hard),
            _ => (0.3, 0.3),
        };
        cfg.window =
            Some(WindowSpec::Static { discard_easy: args.discard_easy.unwrap_or(e0), discard_hard: args.discard_hard.unwrap_or(h0) });
    }
    cfg.validate()?;

    let mut rankings: Vec<Ranking> = args.ranking.iter().map(|p| Ranking::read_tsv(p)).collect::<Result<_>>()?;
    let mut missing = Vec::new();
    for m in needed_methods(&cfg) {
        if rankings.iter().any(|r| r.method == m) {
            continue;
        }
        match &args.rankings_dir {
            Some(dir) if dir.join(format!("{m}.tsv")).exists() => rankings.push(Ranking::read_tsv(&dir.join(format!("{m}.tsv")))?),
            _ => missing.push(m.name()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::Config(format!(
            "strategy {} needs rankings for: {} (use --ranking or --rankings-dir)",
            cfg.strategy.name(),
            missing.join(", ")
        )));
    }
    if cfg.strategy != Strategy::NoWarmup && args.base.is_none() {
        return Err(Error::Config(format!("strategy {} needs --base (a warm-up checkpoint)", cfg.strategy.name())));
    }

    let exp = Experiment::new(cfg.clone(), load_data(&cfg)?)?;
    let outcome = match (&args.base, cfg.strategy) {
        (_, Strategy::NoWarmup) => {
            let updates = cfg.train.max_finetune_updates.unwrap_or(cfg.train.converged_updates);
            let m = cfg.scorer.expect("validated");
            let r = rankings.iter().find(|r| r.method == m).expect("checked");
            exp.run_no_warmup(r, cfg.p, updates)?
        }
        (Some(base), _) => exp.run_strategy(&load_checkpoint(&exp, base)?, &rankings)?,
        (None, _) => unreachable!("checked above"),
    };
    write_run(&args.out, &outcome)?;
    let inputs = json!({
        "base": args.base.as_deref().map(path_str),
        "rankings": rankings.iter().map(|r| r.method.name()).collect::<Vec<_>>(),
        "ranking_files": args.ranking.iter().map(|p| path_str(p)).collect::<Vec<_>>(),
        "rankings_dir": args.rankings_dir.as_deref().map(path_str),
    });
    write_snapshot(&args.out, true, "finetune", Some(cfg.seed), inputs, config_value(&cfg))
}

fn evaluate(args: &ConfigArgs, model: &Path, corpus: Option<&Path>, smoothing: Option<&str>, out: &Path) -> Result<()> {
    let cfg = curriculum_config(args, None)?;
    let corpus_path = corpus.map(Path::to_path_buf).or_else(|| cfg.data.test.as_ref().map(PathBuf::from));
    require(if corpus_path.is_none() { vec!["--corpus (or data.test)"] } else { vec![] })?;
    let corpus_path = corpus_path.expect("checked");
    let smoothing: Smoothing = match smoothing {
        Some(s) => s.parse()?,
        None => cfg.train.smoothing,
    };
    let ckpt = Checkpoint::load(model)?;
    let corpus = load_any_tsv(&corpus_path)?;
    let hyps = model_translations(&ckpt.model, &corpus);
    let refs: Vec<Vec<String>> = corpus.pairs().iter().map(|p| p.tgt.clone()).collect();
    let bleu = corpus_bleu(&hyps, &refs, smoothing)?;
    mkdir(out)?;
    let result = json!({
        "bleu": bleu.score,
        "precisions": bleu.precisions,
        "brevity_penalty": bleu.brevity_penalty,
        "hyp_len": bleu.hyp_len,
        "ref_len": bleu.ref_len,
    });
    write_json(&out.join("bleu.json"), &result)?;
    let text: String = hyps.iter().map(|h| h.join(" ") + "\n").collect();
    write_text(&out.join("translations.txt"), &text)?;
    println!("{bleu}");
    let inputs = json!({ "model": path_str(model), "corpus": path_str(&corpus_path), "smoothing": format!("{smoothing:?}") });
    write_snapshot(out, true, "evaluate", None, inputs, Value::Null)
}

/// `start:end:step` (inclusive) or a comma-separated list.
fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("malformed grid '{spec}' (expected start:end:step or a comma list)"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let grid: Vec<f64> = if spec.contains(':') {
        let parts: Vec<f64> = spec.split(':').map(num).collect::<Result<_>>()?;
        let [start, end, step] = parts[..] else { return Err(bad()) };
        if !(step > 0.0) || end < start {
            return Err(bad());
        }
        let n = ((end - start) / step + 1e-9).floor() as usize;
        // Rounded to 1e-12 so 0.1 + 2 * 0.1 reads as 0.3.
        (0..=n).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect()
    } else {
        spec.split(',').map(num).collect::<Result<_>>()?
    };
    if grid.is_empty() || grid.iter().any(|p| !(*p > 0.0 && *p <= 1.0)) {
        return Err(Error::Config(format!("grid '{spec}' must hold fractions in (0,1]")));
    }
    Ok(grid)
}

fn overlap(methods: &str, dir: &Path, grid: &str, out: &Path) -> Result<()> {
    let grid = parse_grid(grid)?;
    let methods: Vec<Method> = methods.split(',').map(|m| m.trim().parse()).collect::<Result<_>>()?;
    let rankings: Vec<(String, Ranking)> = methods
        .iter()
        .map(|m| Ok((m.to_string(), Ranking::read_tsv(&dir.join(format!("{m}.tsv")))?)))
        .collect::<Result<_>>()?;
    let table = overlap_matrix(&rankings, &grid)?;
    parent_dir(out)?;
    table.write_csv(out)?;
    print!("{}", table.to_csv());
    let names: Vec<&str> = methods.iter().map(|m| m.name()).collect();
    write_snapshot(out, false, "overlap", None, json!({ "methods": names, "rankings_dir": path_str(dir), "grid": grid }), Value::Null)
}

fn report(runs: &[PathBuf], out: &Path, svg: bool) -> Result<()> {
    let reports: Vec<RunReport> = runs
        .iter()
        .map(|dir| {
            let path = dir.join("report.json");
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            serde_json::from_str(&text).map_err(|e| Error::Format { kind: "report", msg: format!("{}: {e}", path.display()) })
        })
        .collect::<Result<_>>()?;
    emit_report(&reports, out, svg)?;
    print!("{}", fs::read_to_string(out.join("comparison.csv")).map_err(io_err(out))?);
    let runs: Vec<String> = runs.iter().map(|p| path_str(p)).collect();
    write_snapshot(out, true, "report", None, json!({ "runs": runs, "svg": svg }), Value::Null)
}

fn suite(args: &ConfigArgs, rerun: Option<&Path>, out: &Path) -> Result<()> {
    let cfg = match rerun {
        Some(dir) => {
            let path = dir.join(SNAPSHOT_FILE);
            SuiteConfig::from_json(&fs::read_to_string(&path).map_err(io_err(&path))?)?
        }
        None => load_value(args, SuiteConfig::default())?,
    };
    let outcome = run_suite(&cfg, out)?;
    println!("strategy,total_updates,best_valid_bleu,test_bleu");
    for r in &outcome.reports {
        println!("{},{},{:.2},{:.2}", r.strategy, r.total_updates, r.best_valid_bleu, r.best_test_bleu);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_ranges_are_inclusive_and_rounded() {
        let g = parse_grid("0.1:0.9:0.1").unwrap();
        assert_eq!(g, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]);
        assert_eq!(parse_grid("0.25, 0.5").unwrap(), vec![0.25, 0.5]);
    }

    #[test]
    fn bad_grids_are_rejected() {
        for g in ["", "0.1:0.9", "0.5:0.1:0.1", "0.1:0.9:0", "0:0.5:0.1", "x"] {
            assert!(parse_grid(g).is_err(), "{g}");
        }
    }

    #[test]
    fn snapshot_sits_beside_files_and_inside_dirs() {
        assert_eq!(snapshot_path(Path::new("a/b.tsv"), false), PathBuf::from("a/b.tsv.config.json"));
        assert_eq!(snapshot_path(Path::new("a/run"), true), PathBuf::from("a/run/effective_config.json"));
    }

    #[test]
    fn strategy_flag_swaps_in_a_matching_window() {
        let args = ConfigArgs { config: None, set: vec![], seed: None };
        let cfg = curriculum_config(&args, Some(Strategy::OnlineShrink)).unwrap();
        assert!(window_fits(Strategy::OnlineShrink, cfg.window));
        let cfg = curriculum_config(&args, Some(Strategy::Deterministic)).unwrap();
        assert_eq!(cfg.scorer, Some(Method::Dcce));
    }

    #[test]
    fn set_and_seed_override_defaults() {
        let args = ConfigArgs { config: None, set: vec!["train.lr=0.5".into(), "p=0.25".into()], seed: Some(9) };
        let cfg = curriculum_config(&args, None).unwrap();
        assert_eq!((cfg.train.lr, cfg.p, cfg.seed), (0.5, 0.25, 9));
    }
}
