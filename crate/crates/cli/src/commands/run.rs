use std::path::{Path, PathBuf};

use emomtl::corpus::{Preprocessor, Vocabulary};
use emomtl::experiment::{prepare_data, run_experiment, PreparedData, RunOutcome};
use emomtl::models::{AuxTask, Checkpoint};

use crate::config::{dataset_name, setting_slug, ExperimentConfig};
use crate::error::{create_dir, write, CliResult};
use crate::results::{append_row, MetricsRecord};

pub fn run_dir_name(prefix: &str, cfg: &ExperimentConfig) -> String {
    let alpha = match cfg.aux() {
        AuxTask::None => String::new(),
        _ => format!("-a{:.2}", cfg.train.weights.alpha()),
    };
    format!("{prefix}-{}-{}{alpha}-seed{}", cfg.encoder.kind.name(), setting_slug(cfg.aux()), cfg.seed)
}

/// Writes the config snapshot, history and checkpoint of a finished run.
pub fn write_run_artifacts(
    dir: &Path,
    cfg: &ExperimentConfig,
    outcome: &RunOutcome,
    vocab: &Vocabulary,
) -> CliResult<()> {
    create_dir(dir)?;
    write(&dir.join("config.json"), cfg.snapshot())?;
    write(&dir.join("history.csv"), outcome.fit.history_csv())?;
    Checkpoint::from_model(&outcome.model, Some(vocab), &cfg.hash()).save(&dir.join("checkpoint.json"))?;
    Ok(())
}

pub fn record(
    cfg: &ExperimentConfig,
    dataset: &str,
    train: &str,
    test: &str,
    data: &PreparedData,
    outcome: &RunOutcome,
) -> MetricsRecord {
    MetricsRecord {
        dataset: dataset.to_string(),
        model: cfg.encoder.kind.label().to_string(),
        setting: cfg.aux().setting().to_string(),
        train_corpus: train.to_string(),
        test_corpus: test.to_string(),
        alpha: (cfg.aux() != AuxTask::None).then(|| cfg.train.weights.alpha()),
        seed: cfg.seed,
        best_epoch: outcome.fit.best_epoch,
        epochs_run: outcome.fit.history.len(),
        stopped_early: outcome.fit.stopped_early,
        vocab_size: data.vocab.len(),
        n_train: data.train.len(),
        n_validation: data.validation.len(),
        n_test: data.test.len(),
        test: outcome.test.metrics,
        aux_accuracy: outcome.test.aux_accuracy,
    }
}

/// Trains per the config, evaluates on the test corpus and writes the run directory.
pub fn cmd_run(cfg: &ExperimentConfig) -> CliResult<PathBuf> {
    cfg.validate()?;
    let train = cfg.load_corpus(&cfg.train_path)?;
    let test = cfg.load_corpus(&cfg.test_path)?;
    let pre = Preprocessor::default();
    let data = prepare_data(&train, &test, &pre, &cfg.data_options(), cfg.seed)?;
    let outcome = run_experiment(&cfg.encoder, cfg.aux(), &data, &cfg.train)?;

    let dataset = dataset_name(&train.name);
    let dir = cfg.out_dir.join(run_dir_name(&dataset, cfg));
    write_run_artifacts(&dir, cfg, &outcome, &data.vocab)?;
    let rec = record(cfg, &dataset, &train.name, &test.name, &data, &outcome);
    rec.write(&dir.join("metrics.json"))?;
    append_row(&cfg.out_dir.join("results.csv"), &rec.row())?;
    println!("{}", rec.row().csv_line());
    Ok(dir)
}
