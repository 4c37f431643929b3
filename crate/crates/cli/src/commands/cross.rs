use std::path::PathBuf;

use emomtl::corpus::{encode_corpus, load_corpus, CorpusSchema, Preprocessor};
use emomtl::experiment::{prepare_data, run_experiment};
use emomtl::metrics::evaluate;

use super::run::{record, run_dir_name, write_run_artifacts};
use crate::config::{dataset_name, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::results::append_row;

/// Trains on corpus A and evaluates on A's test split (in-domain) and on
/// all of corpus B (cross-domain). B is encoded with A's sealed vocabulary.
pub fn cmd_cross(cfg: &ExperimentConfig) -> CliResult<PathBuf> {
    cfg.validate()?;
    let cross_path = cfg.cross_test_path.as_ref().ok_or_else(|| CliError::invalid("config has no cross_test_path"))?;
    let train = cfg.load_corpus(&cfg.train_path)?;
    let test = cfg.load_corpus(&cfg.test_path)?;
    let other = load_corpus(cross_path, &CorpusSchema::default())?;
    let pre = Preprocessor::default();
    let data = prepare_data(&train, &test, &pre, &cfg.data_options(), cfg.seed)?;
    let sealed = data.vocab.len();
    let other_encoded = encode_corpus(&other, &pre, &data.vocab, cfg.encoder.max_len)?;
    debug_assert_eq!(data.vocab.len(), sealed);
    let outcome = run_experiment(&cfg.encoder, cfg.aux(), &data, &cfg.train)?;

    let (a, b) = (dataset_name(&train.name), dataset_name(&other.name));
    let dir = cfg.out_dir.join(run_dir_name(&format!("cross-{a}-to-{b}"), cfg));
    write_run_artifacts(&dir, cfg, &outcome, &data.vocab)?;

    let in_domain = record(cfg, &a, &train.name, &test.name, &data, &outcome);
    let labels: Vec<usize> = other_encoded.iter().map(|s| s.label as usize).collect();
    let predictions = outcome.model.predict_batch(&other_encoded, 256)?;
    let mut cross = record(cfg, &format!("{a}→{b}"), &train.name, &other.name, &data, &outcome);
    cross.test = evaluate(&predictions, &labels).map_err(CliError::runtime)?;
    cross.n_test = other_encoded.len();
    cross.aux_accuracy = None;

    crate::error::create_dir(&dir.join("in-domain"))?;
    in_domain.write(&dir.join("in-domain").join("metrics.json"))?;
    cross.write(&dir.join("metrics.json"))?;
    for rec in [&in_domain, &cross] {
        append_row(&cfg.out_dir.join("results.csv"), &rec.row())?;
        println!("{}", rec.row().csv_line());
    }
    Ok(dir)
}
