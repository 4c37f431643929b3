//! Glue between corpora and training: vocabulary sealing, encoding,
//! validation hold-out and a single train-then-test run.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{
    build_vocab, encode_corpus, stratified_split, Corpus, CorpusError, CorpusSchema, EncodedSample, Preprocessor,
    Vocabulary, DEFAULT_MAX_LEN, DEFAULT_MAX_SIZE, DEFAULT_MIN_FREQ,
};
use crate::models::{build_model, AuxTask, EncoderConfig, ModelError, MtlModel};
use crate::rng::stream_key;
use crate::training::{evaluate_model, fit, EvalResult, FitResult, TrainConfig, TrainError};

pub const DEFAULT_VALIDATION_FRACTION: f64 = 0.1;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Train(#[from] TrainError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataOptions {
    pub max_len: usize,
    pub min_freq: usize,
    pub max_size: usize,
    /// Share of the training corpus held out for validation; 0 disables it.
    pub validation_fraction: f64,
}

impl Default for DataOptions {
    fn default() -> Self {
        Self {
            max_len: DEFAULT_MAX_LEN,
            min_freq: DEFAULT_MIN_FREQ,
            max_size: DEFAULT_MAX_SIZE,
            validation_fraction: DEFAULT_VALIDATION_FRACTION,
        }
    }
}

/// Encoded splits sharing one vocabulary built from the training split only.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub vocab: Vocabulary,
    pub train: Vec<EncodedSample>,
    pub validation: Vec<EncodedSample>,
    pub test: Vec<EncodedSample>,
    /// Sorted domain names seen in the training split.
    pub domains: Vec<String>,
}

/// Tags a corpus must carry for the given auxiliary task.
pub fn schema_for(aux: AuxTask) -> CorpusSchema {
    CorpusSchema {
        require_ekman: aux == AuxTask::EmotionEkman,
        require_plutchik: aux == AuxTask::EmotionPlutchik,
        require_domain: aux == AuxTask::Domain,
    }
}

/// Holds out a validation split from `train`, builds the vocabulary from the
/// remaining training samples and encodes every split with it. The test
/// corpus is only encoded, so it can never add vocabulary entries.
pub fn prepare_data(
    train: &Corpus,
    test: &Corpus,
    pre: &Preprocessor,
    opts: &DataOptions,
    seed: u64,
) -> Result<PreparedData, ExperimentError> {
    let (fit_set, validation) = if opts.validation_fraction > 0.0 {
        let (fit_set, validation) = stratified_split(train, opts.validation_fraction, stream_key(seed, "validation"))?;
        (fit_set, Some(validation))
    } else {
        (train.clone(), None)
    };
    let vocab = build_vocab(&fit_set, pre, opts.min_freq, opts.max_size);
    let encode = |c: &Corpus| encode_corpus(c, pre, &vocab, opts.max_len);
    Ok(PreparedData {
        train: encode(&fit_set)?,
        validation: validation.as_ref().map(encode).transpose()?.unwrap_or_default(),
        test: encode(test)?,
        domains: fit_set.domains(),
        vocab,
    })
}

/// Builds a fresh model for `data` (domain classes included when needed).
pub fn build_for(
    encoder: &EncoderConfig,
    aux: AuxTask,
    data: &PreparedData,
    seed: u64,
) -> Result<MtlModel, ModelError> {
    match aux {
        AuxTask::Domain => build_model(encoder, data.vocab.len(), aux, Some(data.domains.len()), seed)?
            .with_domain_classes(data.domains.clone()),
        _ => build_model(encoder, data.vocab.len(), aux, None, seed),
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub model: MtlModel,
    pub fit: FitResult,
    pub test: EvalResult,
}

/// Trains a model seeded with `config.seed` and scores it on the test split.
pub fn run_experiment(
    encoder: &EncoderConfig,
    aux: AuxTask,
    data: &PreparedData,
    config: &TrainConfig,
) -> Result<RunOutcome, ExperimentError> {
    let mut model = build_for(encoder, aux, data, config.seed)?;
    let fit = fit(&mut model, &data.train, &data.validation, config)?;
    let test = evaluate_model(&model, &data.test, &config.weights)?;
    Ok(RunOutcome { model, fit, test })
}
