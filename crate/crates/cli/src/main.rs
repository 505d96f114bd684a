//! `curricula`: synthetic data, corpus preparation, scorer training,
//! scoring and ranking, curriculum fine-tuning, evaluation and analysis.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 data error, 3 training diverged.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use curricula::{Error, ErrorKind};

mod commands;

#[derive(Debug, Parser)]
#[command(name = "curricula", version, about = "Two-stage curriculum training for toy neural machine translation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Config file, dotted overrides and seed. Flags win over `--set`, which wins over the file.
#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// JSON config file; built-in defaults when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a config key by dotted name, e.g. `--set train.lr=0.001`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TokenizerArg {
    Whitespace,
    Char,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SideArg {
    Source,
    Target,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DomainArg {
    InDomain,
    General,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic cipher corpus, held-out sets and a token embedding table.
    Synth {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Clean, deduplicate and split a parallel corpus.
    Prepare(PrepareArgs),
    /// Train the warm-up model, or with --reverse / --forward-scorer a DCCE translation model.
    TrainWarmup {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Train the target-to-source DCCE model.
        #[arg(long)]
        reverse: bool,
        /// Train the source-to-target DCCE model.
        #[arg(long, conflicts_with = "reverse")]
        forward_scorer: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Continue a warm-up checkpoint on all general data until convergence.
    TrainConverged {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one n-gram language model for MML scoring.
    TrainLm {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, value_enum)]
        side: SideArg,
        #[arg(long, value_enum)]
        domain: DomainArg,
        /// Output model file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score every pair of the fine-tuning pool with one method.
    Score(ScoreArgs),
    /// Turn a score file into a ranking, best first.
    Rank {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one fine-tuning strategy from a warm-up checkpoint.
    Finetune(FinetuneArgs),
    /// BLEU of a checkpoint on a corpus.
    Evaluate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        model: PathBuf,
        /// Corpus TSV; `data.test` of the config when absent.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// none or add_one; the config's setting when absent.
        #[arg(long)]
        smoothing: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pairwise overlap of ranked subsets over a grid of fractions.
    Overlap {
        /// Comma-separated method names; rankings are read from `<dir>/<method>.tsv`.
        #[arg(long)]
        methods: String,
        #[arg(long)]
        rankings_dir: PathBuf,
        /// `start:end:step` or a comma-separated list.
        #[arg(long, default_value = "0.1:0.9:0.1")]
        grid: String,
        /// Output CSV file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Merge run directories into one comparison report.
    Report {
        #[arg(long, num_args = 1.., required = true)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: bool,
    },
    /// Run the full strategy comparison.
    Suite {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Rerun from the effective config snapshot in this directory.
        #[arg(long, conflicts_with_all = ["config", "set", "seed"])]
        rerun: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    /// Source side, one sentence per line (with --tgt).
    #[arg(long, requires = "tgt", conflicts_with = "tsv")]
    pub src: Option<PathBuf>,
    #[arg(long, requires = "src")]
    pub tgt: Option<PathBuf>,
    /// Two-column or labeled TSV.
    #[arg(long, required_unless_present = "src")]
    pub tsv: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "whitespace")]
    pub tokenizer: TokenizerArg,
    #[arg(long, default_value_t = 250)]
    pub max_len: usize,
    #[arg(long, default_value_t = 0.1)]
    pub valid_frac: f64,
    #[arg(long, default_value_t = 0.1)]
    pub test_frac: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub cfg: ConfigArgs,
    /// laser_csls, dcce, mml or prediction.
    #[arg(long)]
    pub method: String,
    /// Forward DCCE checkpoint.
    #[arg(long)]
    pub fwd: Option<PathBuf>,
    /// Backward DCCE checkpoint.
    #[arg(long)]
    pub bwd: Option<PathBuf>,
    #[arg(long)]
    pub lm_src_in: Option<PathBuf>,
    #[arg(long)]
    pub lm_src_gen: Option<PathBuf>,
    #[arg(long)]
    pub lm_tgt_in: Option<PathBuf>,
    #[arg(long)]
    pub lm_tgt_gen: Option<PathBuf>,
    /// word2vec token table; `data.embeddings` of the config when absent.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Checkpoint for prediction scores.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Output score file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FinetuneArgs {
    #[command(flatten)]
    pub cfg: ConfigArgs,
    #[arg(long)]
    pub strategy: Option<String>,
    /// Warm-up checkpoint; not used by no_warmup.
    #[arg(long)]
    pub base: Option<PathBuf>,
    /// Directory of `<method>.tsv` rankings.
    #[arg(long)]
    pub rankings_dir: Option<PathBuf>,
    /// Ranking file; repeatable.
    #[arg(long)]
    pub ranking: Vec<PathBuf>,
    /// External scorer for deterministic and no_warmup.
    #[arg(long)]
    pub scorer: Option<String>,
    /// Top fraction for deterministic and no_warmup.
    #[arg(long)]
    pub p: Option<f64>,
    /// Static window: share of easiest pairs dropped.
    #[arg(long)]
    pub discard_easy: Option<f64>,
    /// Static window: share of hardest pairs dropped.
    #[arg(long)]
    pub discard_hard: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Usage => 1,
        ErrorKind::Data => 2,
        ErrorKind::Diverged => 3,
    }
}

fn configure_threads() -> Result<(), Error> {
    let Ok(raw) = std::env::var("CURRICULA_THREADS") else {
        return Ok(());
    };
    let n = raw
        .trim()
        .parse::<usize>()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("CURRICULA_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = configure_threads().and_then(|()| commands::run(cli.command));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}
