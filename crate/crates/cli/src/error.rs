use std::fmt::Display;

use emomtl::analysis::AnalysisError;
use emomtl::corpus::CorpusError;
use emomtl::emotion::EmotionError;
use emomtl::experiment::ExperimentError;
use emomtl::models::ModelError;
use emomtl::synth::SynthError;
use emomtl::training::TrainError;
use thiserror::Error;

/// Command failure, split by exit code: invalid configuration or input
/// exits with 2, anything that goes wrong while computing exits with 1.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn invalid(msg: impl Display) -> Self {
        CliError::Invalid(msg.to_string())
    }

    pub fn runtime(msg: impl Display) -> Self {
        CliError::Runtime(msg.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::invalid(e)
    }
}

impl From<EmotionError> for CliError {
    fn from(e: EmotionError) -> Self {
        CliError::invalid(e)
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Engine(_) => CliError::runtime(e),
            _ => CliError::invalid(e),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Config(_) => CliError::invalid(e),
            TrainError::Model(m) => m.into(),
            _ => CliError::runtime(e),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Corpus(c) => c.into(),
            ExperimentError::Model(m) => m.into(),
            ExperimentError::Train(t) => t.into(),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Io { .. } => CliError::runtime(e),
            _ => CliError::invalid(e),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Config(_) => CliError::invalid(e),
            _ => CliError::runtime(e),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Writes `contents` to `path`, mapping failures to runtime errors.
pub fn write(path: &std::path::Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

pub fn create_dir(path: &std::path::Path) -> CliResult<()> {
    std::fs::create_dir_all(path).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}
