//! The experiment configuration document and its on-disk snapshot.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use emomtl::corpus::{load_corpus, Corpus, CorpusSchema, DEFAULT_MAX_SIZE, DEFAULT_MIN_FREQ};
use emomtl::experiment::{schema_for, DataOptions, DEFAULT_VALIDATION_FRACTION};
use emomtl::models::{AuxTask, EncoderConfig};
use emomtl::training::{LossWeights, SweepConfig, TrainConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuxKind {
    #[default]
    None,
    Ekman,
    Plutchik,
    Domain,
}

impl From<AuxKind> for AuxTask {
    fn from(k: AuxKind) -> AuxTask {
        match k {
            AuxKind::None => AuxTask::None,
            AuxKind::Ekman => AuxTask::EmotionEkman,
            AuxKind::Plutchik => AuxTask::EmotionPlutchik,
            AuxKind::Domain => AuxTask::Domain,
        }
    }
}

/// Vocabulary and validation settings; the sequence length comes from the encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub min_freq: usize,
    pub max_size: usize,
    pub validation_fraction: f64,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            min_freq: DEFAULT_MIN_FREQ,
            max_size: DEFAULT_MAX_SIZE,
            validation_fraction: DEFAULT_VALIDATION_FRACTION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub train_path: PathBuf,
    pub test_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross_test_path: Option<PathBuf>,
    #[serde(default)]
    pub auxiliary: AuxKind,
    pub encoder: EncoderConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Command-line overrides applied to this snapshot, by key.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub overrides: BTreeMap<String, Value>,
}

/// Scalar fields that may be overridden from the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub epochs: Option<usize>,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl ExperimentConfig {
    /// Reads a config; relative paths are taken relative to the file's directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
        let mut cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let base = if base.as_os_str().is_empty() { PathBuf::from(".") } else { base };
        cfg.train_path = resolve(&base, &cfg.train_path);
        cfg.test_path = resolve(&base, &cfg.test_path);
        cfg.cross_test_path = cfg.cross_test_path.as_deref().map(|p| resolve(&base, p));
        cfg.out_dir = resolve(&base, &cfg.out_dir);
        cfg.encoder = cfg.encoder.with_defaults();
        cfg.train.seed = cfg.seed;
        if let Some(s) = cfg.sweep.as_mut() {
            s.base = cfg.train.clone();
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) -> CliResult<()> {
        if let Some(seed) = o.seed {
            self.seed = seed;
            self.overrides.insert("seed".into(), seed.into());
        }
        if let Some(alpha) = o.alpha {
            self.train.weights = LossWeights::new(alpha).map_err(CliError::invalid)?;
            self.overrides.insert("alpha".into(), alpha.into());
        }
        if let Some(epochs) = o.epochs {
            self.train.epochs = epochs;
            self.overrides.insert("epochs".into(), epochs.into());
        }
        self.train.seed = self.seed;
        if let Some(s) = self.sweep.as_mut() {
            s.base = self.train.clone();
        }
        Ok(())
    }

    pub fn validate(&self) -> CliResult<()> {
        self.encoder.validate()?;
        self.train.validate()?;
        if let Some(s) = &self.sweep {
            s.grid()?;
        }
        let d = &self.data;
        if !(0.0..1.0).contains(&d.validation_fraction) {
            return Err(CliError::invalid(format!(
                "data.validation_fraction must lie in [0, 1), got {}",
                d.validation_fraction
            )));
        }
        for p in [Some(&self.train_path), Some(&self.test_path), self.cross_test_path.as_ref()].into_iter().flatten() {
            if !p.is_file() {
                return Err(CliError::invalid(format!("corpus file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn aux(&self) -> AuxTask {
        self.auxiliary.into()
    }

    pub fn data_options(&self) -> DataOptions {
        DataOptions {
            max_len: self.encoder.max_len,
            min_freq: self.data.min_freq,
            max_size: self.data.max_size,
            validation_fraction: self.data.validation_fraction,
        }
    }

    pub fn snapshot(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises") + "\n"
    }

    /// SHA-256 of the snapshot, stored in checkpoints.
    pub fn hash(&self) -> String {
        Sha256::digest(self.snapshot().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Loads a corpus and checks it carries the tags the auxiliary task needs.
    pub fn load_corpus(&self, path: &Path) -> CliResult<Corpus> {
        let corpus = load_corpus(path, &CorpusSchema::default())?;
        corpus.check_schema(&schema_for(self.aux())).map_err(|e| {
            let what = match self.aux() {
                AuxTask::EmotionEkman | AuxTask::EmotionPlutchik => "missing emotion tags",
                _ => "missing tags",
            };
            CliError::invalid(format!(
                "corpus `{}` ({}): {what} required by {}: {e}",
                corpus.name,
                path.display(),
                self.aux().setting()
            ))
        })?;
        Ok(corpus)
    }
}

/// Dataset name of a corpus: its name without a trailing train/test marker.
pub fn dataset_name(corpus_name: &str) -> String {
    for suffix in ["-train", "_train", ".train", "-test", "_test", ".test"] {
        if let Some(stem) = corpus_name.strip_suffix(suffix) {
            if !stem.is_empty() {
                return stem.to_string();
            }
        }
    }
    corpus_name.to_string()
}

/// Short directory tag of a setting, e.g. `mtl-ekman`.
pub fn setting_slug(aux: AuxTask) -> &'static str {
    match aux {
        AuxTask::None => "stl",
        AuxTask::EmotionEkman => "mtl-ekman",
        AuxTask::EmotionPlutchik => "mtl-plutchik",
        AuxTask::Domain => "mtl-domain",
    }
}
