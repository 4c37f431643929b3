//! `emomtl`: train and evaluate single-task and emotion-aware multi-task
//! veracity classifiers from a JSON experiment config.

mod commands;
mod config;
mod error;
mod results;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use emomtl::analysis::DEFAULT_COMPONENTS;
use emomtl::corpus::{DEFAULT_MAX_SIZE, DEFAULT_MIN_FREQ};
use emomtl::emotion::EmotionScheme;
use emomtl::models::EncoderKind;
use emomtl::synth::SynthConfig;

use crate::commands::pca::Features;
use crate::config::{ExperimentConfig, Overrides};
use crate::error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "emomtl", version, about = "Emotion-aware multi-task veracity classification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config (JSON). Relative paths inside it resolve against its directory.
    #[arg(long, short)]
    config: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the auxiliary loss weight α (β = 1 − α).
    #[arg(long)]
    alpha: Option<f64>,
    /// Override the number of epochs.
    #[arg(long)]
    epochs: Option<usize>,
}

impl ConfigArgs {
    fn load(&self) -> CliResult<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        cfg.apply(&Overrides { seed: self.seed, alpha: self.alpha, epochs: self.epochs })?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Ekman,
    Plutchik,
    Both,
}

impl SchemeArg {
    fn schemes(self) -> Vec<EmotionScheme> {
        match self {
            SchemeArg::Ekman => vec![EmotionScheme::Ekman6],
            SchemeArg::Plutchik => vec![EmotionScheme::Plutchik8],
            SchemeArg::Both => EmotionScheme::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    MeanPool,
    Cnn,
    Lstm,
    CnnLstm,
}

impl From<KindArg> for EncoderKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::MeanPool => EncoderKind::MeanPool,
            KindArg::Cnn => EncoderKind::Cnn,
            KindArg::Lstm => EncoderKind::Lstm,
            KindArg::CnnLstm => EncoderKind::CnnLstm,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Clean a corpus into token lists (and optionally a vocabulary).
    Preprocess {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Contraction dictionary (TSV); the bundled one by default.
        #[arg(long)]
        contractions: Option<PathBuf>,
        /// Also write the vocabulary built from the corpus.
        #[arg(long)]
        vocab_out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_MIN_FREQ)]
        min_freq: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_SIZE)]
        max_size: usize,
    },
    /// Tag a corpus with Ekman or Plutchik emotion classes.
    Annotate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, value_parser = ["ekman", "plutchik"])]
        scheme: String,
        /// Lexicon TSV, or `builtin` for the bundled demonstration lexicon.
        #[arg(long, conflicts_with = "import")]
        lexicon: Option<String>,
        /// Annotation file produced by an external emotion model.
        #[arg(long)]
        import: Option<PathBuf>,
    },
    /// Train one model and evaluate it on the test corpus.
    Run(ConfigArgs),
    /// Sweep α over the config's grid for one or more encoders.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// Encoders to sweep (comma separated); the config's encoder by default.
        #[arg(long, value_enum, value_delimiter = ',')]
        models: Vec<KindArg>,
    },
    /// Train on the config's corpus and evaluate on `cross_test_path`.
    Cross(ConfigArgs),
    /// PCA of sample features split by veracity label and coloured by emotion.
    Pca {
        /// Corpus file(s); all samples are projected on one basis.
        #[arg(long = "corpus", required = true)]
        corpora: Vec<PathBuf>,
        /// Imported embeddings (JSONL with `id` and `vector`).
        #[arg(long, conflicts_with = "checkpoint")]
        embeddings: Option<PathBuf>,
        /// Use the shared-encoder representations of a trained checkpoint.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "both")]
        scheme: SchemeArg,
        #[arg(long, short, default_value_t = DEFAULT_COMPONENTS)]
        k: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Aggregate all runs under a directory into a results table.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
    /// Generate a synthetic corpus with a planted emotion–label correlation.
    Synth {
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        rumour_fraction: f64,
        #[arg(long, default_value_t = 0.8)]
        correlation: f64,
        #[arg(long, default_value_t = 0.1)]
        label_noise: f64,
        #[arg(long, default_value_t = 0.5)]
        style_rate: f64,
        #[arg(long, default_value = "general")]
        domain: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Reproduce the per-event label counts of PHEME 9 instead of `n` samples.
        #[arg(long)]
        pheme_counts: bool,
        /// Also write `<stem>-train.jsonl` / `<stem>-test.jsonl` with this test fraction.
        #[arg(long)]
        split: Option<f64>,
    },
}

fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Preprocess { input, output, contractions, vocab_out, min_freq, max_size } => {
            commands::data::cmd_preprocess(
                &input,
                &output,
                contractions.as_deref(),
                vocab_out.as_deref(),
                min_freq,
                max_size,
            )
        }
        Command::Annotate { input, output, scheme, lexicon, import } => {
            let scheme = EmotionScheme::parse(&scheme)?;
            commands::data::cmd_annotate(&input, &output, scheme, lexicon.as_deref(), import)
        }
        Command::Run(args) => {
            let dir = commands::run::cmd_run(&args.load()?)?;
            eprintln!("run written to {}", dir.display());
            Ok(())
        }
        Command::Sweep { config, models } => {
            let kinds: Vec<EncoderKind> = models.into_iter().map(Into::into).collect();
            let dir = commands::sweep::cmd_sweep(&config.load()?, &kinds)?;
            eprintln!("sweep written to {}", dir.display());
            Ok(())
        }
        Command::Cross(args) => {
            let dir = commands::cross::cmd_cross(&args.load()?)?;
            eprintln!("cross-domain run written to {}", dir.display());
            Ok(())
        }
        Command::Pca { corpora, embeddings, checkpoint, scheme, k, out_dir } => {
            let source = match (embeddings, checkpoint) {
                (Some(e), None) => Features::Embeddings(e),
                (None, Some(c)) => Features::Checkpoint(c),
                _ => return Err(CliError::invalid("missing features: pass --embeddings or --checkpoint")),
            };
            for path in commands::pca::cmd_pca(&corpora, &source, &scheme.schemes(), k, &out_dir)? {
                eprintln!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Report { dir } => commands::report::cmd_report(&dir).map(|_| ()),
        Command::Synth {
            output,
            n,
            rumour_fraction,
            correlation,
            label_noise,
            style_rate,
            domain,
            seed,
            pheme_counts,
            split,
        } => {
            let cfg = SynthConfig {
                n,
                rumour_fraction,
                correlation,
                label_noise,
                style_rate,
                domain,
                seed,
                ..SynthConfig::default()
            };
            commands::data::cmd_synth(&cfg, &output, pheme_counts, split)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
