//! Veracity corpora: the canonical sample record, JSONL loading, cleaning,
//! vocabulary/encoding and deterministic stratified splitting.

mod preprocess;
mod split;
mod vocab;

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::emotion::EmotionScheme;

pub use preprocess::{preprocess_text, ContractionDict, Preprocessor};
pub use split::{stratified_split, DEFAULT_TEST_FRACTION};
pub use vocab::{
    build_vocab, encode, encode_corpus, encode_tokens, EncodedSample, Vocabulary, DEFAULT_MAX_LEN, DEFAULT_MAX_SIZE,
    DEFAULT_MIN_FREQ, PAD_INDEX, PAD_TOKEN, UNK_INDEX, UNK_TOKEN,
};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("contraction dictionary line {line}: {message}")]
    Contraction { line: usize, message: String },
    #[error("duplicate sample id `{0}`")]
    DuplicateId(String),
    #[error("sample `{id}`: label must be 0 or 1, got {label}")]
    InvalidLabel { id: String, label: i64 },
    #[error("sample `{id}`: {scheme} index {index} out of range")]
    EmotionOutOfRange { id: String, scheme: EmotionScheme, index: i64 },
    #[error("missing {field} tags for {count} sample(s), e.g. {examples:?}")]
    MissingTag { field: &'static str, count: usize, examples: Vec<String> },
    #[error("class {class} has {count} sample(s); at least 2 required")]
    TooFewSamples { class: u8, count: usize },
    #[error("{0}")]
    InvalidArgument(String),
}

impl CorpusError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io { path: path.to_path_buf(), source }
    }
}

/// One annotated text. Label 0 is non-rumour/real, label 1 rumour/fake.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub text: String,
    pub label: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emotion_ekman: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emotion_plutchik: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event: Option<String>,
}

impl Sample {
    pub fn new(id: impl Into<String>, text: impl Into<String>, label: u8) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            label,
            emotion_ekman: None,
            emotion_plutchik: None,
            domain: None,
            event: None,
        }
    }

    pub fn emotion(&self, scheme: EmotionScheme) -> Option<usize> {
        match scheme {
            EmotionScheme::Ekman6 => self.emotion_ekman,
            EmotionScheme::Plutchik8 => self.emotion_plutchik,
        }
    }

    pub fn set_emotion(&mut self, scheme: EmotionScheme, class: usize) {
        match scheme {
            EmotionScheme::Ekman6 => self.emotion_ekman = Some(class),
            EmotionScheme::Plutchik8 => self.emotion_plutchik = Some(class),
        }
    }

    fn validate(&self) -> Result<(), CorpusError> {
        if self.label > 1 {
            return Err(CorpusError::InvalidLabel { id: self.id.clone(), label: i64::from(self.label) });
        }
        for scheme in EmotionScheme::ALL {
            if let Some(index) = self.emotion(scheme) {
                if index >= scheme.n() {
                    return Err(CorpusError::EmotionOutOfRange { id: self.id.clone(), scheme, index: index as i64 });
                }
            }
        }
        Ok(())
    }
}

/// Derived per-class counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub total: usize,
    /// `[non-rumour, rumour]`.
    pub label_counts: [usize; 2],
    /// Per-scheme emotion class histogram over tagged samples.
    pub emotion_distribution: BTreeMap<String, Vec<usize>>,
}

/// Ordered collection of samples with unique ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub name: String,
    pub samples: Vec<Sample>,
}

impl Corpus {
    pub fn new(name: impl Into<String>, samples: Vec<Sample>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::with_capacity(samples.len());
        for s in &samples {
            if !seen.insert(s.id.as_str()) {
                return Err(CorpusError::DuplicateId(s.id.clone()));
            }
            s.validate()?;
        }
        Ok(Self { name: name.into(), samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn stats(&self) -> CorpusStats {
        let mut label_counts = [0usize; 2];
        let mut emotion_distribution = BTreeMap::new();
        for s in &self.samples {
            label_counts[usize::from(s.label)] += 1;
        }
        for scheme in EmotionScheme::ALL {
            if self.samples.iter().any(|s| s.emotion(scheme).is_some()) {
                let mut hist = vec![0usize; scheme.n()];
                for class in self.samples.iter().filter_map(|s| s.emotion(scheme)) {
                    hist[class] += 1;
                }
                emotion_distribution.insert(scheme.name().to_string(), hist);
            }
        }
        CorpusStats { total: self.samples.len(), label_counts, emotion_distribution }
    }

    /// Sorted distinct domain tags.
    pub fn domains(&self) -> Vec<String> {
        let set: std::collections::BTreeSet<&str> = self.samples.iter().filter_map(|s| s.domain.as_deref()).collect();
        set.into_iter().map(str::to_string).collect()
    }

    /// Fails unless every sample carries the tags named by `schema`.
    pub fn check_schema(&self, schema: &CorpusSchema) -> Result<(), CorpusError> {
        let check = |required: bool, field: &'static str, has: &dyn Fn(&Sample) -> bool| {
            if !required {
                return Ok(());
            }
            let missing: Vec<String> = self.samples.iter().filter(|s| !has(s)).map(|s| s.id.clone()).collect();
            if missing.is_empty() {
                Ok(())
            } else {
                Err(CorpusError::MissingTag {
                    field,
                    count: missing.len(),
                    examples: missing.into_iter().take(5).collect(),
                })
            }
        };
        check(schema.require_ekman, "emotion_ekman", &|s| s.emotion_ekman.is_some())?;
        check(schema.require_plutchik, "emotion_plutchik", &|s| s.emotion_plutchik.is_some())?;
        check(schema.require_domain, "domain", &|s| s.domain.is_some())?;
        Ok(())
    }
}

/// Optional fields a loaded corpus must carry on every line.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CorpusSchema {
    pub require_ekman: bool,
    pub require_plutchik: bool,
    pub require_domain: bool,
}

#[derive(Deserialize)]
struct RawSample {
    id: Option<String>,
    text: String,
    label: i64,
    emotion_ekman: Option<i64>,
    emotion_plutchik: Option<i64>,
    domain: Option<String>,
    event: Option<String>,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

fn check_emotion(id: &str, scheme: EmotionScheme, raw: Option<i64>) -> Result<Option<usize>, CorpusError> {
    match raw {
        None => Ok(None),
        Some(i) if i >= 0 && (i as usize) < scheme.n() => Ok(Some(i as usize)),
        Some(i) => Err(CorpusError::EmotionOutOfRange { id: id.to_string(), scheme, index: i }),
    }
}

/// Loads a JSONL corpus. The corpus name is the file stem. Lines without an
/// `id` get `line-<n>` (1-based line number).
pub fn load_corpus(path: &Path, schema: &CorpusSchema) -> Result<Corpus, CorpusError> {
    let file = std::fs::File::open(path).map_err(|e| CorpusError::io(path, e))?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "corpus".into());
    let mut samples = Vec::new();
    let mut warned = HashSet::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| CorpusError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| CorpusError::Parse { path: path.to_path_buf(), line: line_no, message };
        let raw: RawSample = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        for key in raw.extra.keys() {
            if warned.insert(key.clone()) {
                log::warn!("{}:{line_no}: ignoring unknown key `{key}`", path.display());
            }
        }
        let id = raw.id.unwrap_or_else(|| format!("line-{line_no}"));
        let label = match raw.label {
            0 => 0,
            1 => 1,
            other => return Err(parse_err(CorpusError::InvalidLabel { id, label: other }.to_string())),
        };
        let emotion_ekman =
            check_emotion(&id, EmotionScheme::Ekman6, raw.emotion_ekman).map_err(|e| parse_err(e.to_string()))?;
        let emotion_plutchik =
            check_emotion(&id, EmotionScheme::Plutchik8, raw.emotion_plutchik).map_err(|e| parse_err(e.to_string()))?;
        samples.push(Sample {
            id,
            text: raw.text,
            label,
            emotion_ekman,
            emotion_plutchik,
            domain: raw.domain,
            event: raw.event,
        });
    }
    let corpus = Corpus::new(name, samples)?;
    corpus.check_schema(schema)?;
    Ok(corpus)
}

/// Writes `corpus` in the canonical JSONL form.
pub fn write_corpus(corpus: &Corpus, path: &Path) -> Result<(), CorpusError> {
    let file = std::fs::File::create(path).map_err(|e| CorpusError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for s in &corpus.samples {
        let line = serde_json::to_string(s).expect("sample serializes");
        writeln!(out, "{line}").map_err(|e| CorpusError::io(path, e))?;
    }
    out.flush().map_err(|e| CorpusError::io(path, e))
}
