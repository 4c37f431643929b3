//! Principal component analysis over sample feature vectors, legitimacy
//! views coloured by emotion, and plot emission.

mod pca;
mod plot;

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::emotion::EmotionScheme;

pub use pca::{fit_pca, jacobi_eigen, project, reconstruct, PcaResult, DEFAULT_COMPONENTS};
pub use plot::{emit_scatter, emit_sweep_plot, emotion_color, scatter_csv, sweep_svg, ScatterFiles, SweepSeries};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("{0}")]
    InvalidInput(String),
    #[error("requested {k} components but at most {max} are available")]
    TooManyComponents { k: usize, max: usize },
    #[error("features have zero variance")]
    ZeroVariance,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("sample `{id}` has no {scheme} emotion tag")]
    MissingEmotion { id: String, scheme: EmotionScheme },
    #[error("no feature vector for sample `{0}`")]
    MissingFeatures(String),
    #[error("duplicate feature id `{0}`")]
    DuplicateId(String),
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl AnalysisError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        AnalysisError::Io { path: path.to_path_buf(), source }
    }
}

/// Where a feature matrix came from; recorded in every analysis output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSource {
    EncoderRepresentation,
    ImportedEmbeddings,
}

impl FeatureSource {
    pub fn describe(self) -> &'static str {
        match self {
            FeatureSource::EncoderRepresentation => "trained shared-encoder representations",
            FeatureSource::ImportedEmbeddings => "imported embeddings",
        }
    }
}

/// One finite feature vector per sample id.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    ids: Vec<String>,
    rows: Vec<Vec<f64>>,
    dim: usize,
    source: FeatureSource,
}

#[derive(Deserialize)]
struct EmbeddingLine {
    id: String,
    vector: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(ids: Vec<String>, rows: Vec<Vec<f64>>, source: FeatureSource) -> Result<Self, AnalysisError> {
        if ids.len() != rows.len() {
            return Err(AnalysisError::InvalidInput(format!("{} ids for {} feature rows", ids.len(), rows.len())));
        }
        let dim = rows.first().map_or(0, Vec::len);
        let mut seen = HashSet::new();
        for (id, row) in ids.iter().zip(&rows) {
            if !seen.insert(id.as_str()) {
                return Err(AnalysisError::DuplicateId(id.clone()));
            }
            if row.len() != dim {
                return Err(AnalysisError::DimensionMismatch { expected: dim, got: row.len() });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(AnalysisError::InvalidInput(format!("non-finite feature value for `{id}`")));
            }
        }
        Ok(Self { ids, rows, dim, source })
    }

    /// Reads JSONL lines of the form `{"id": "...", "vector": [...]}`.
    pub fn from_embeddings_jsonl(path: &Path) -> Result<Self, AnalysisError> {
        let file = std::fs::File::open(path).map_err(|e| AnalysisError::io(path, e))?;
        let (mut ids, mut rows) = (Vec::new(), Vec::new());
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| AnalysisError::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: EmbeddingLine = serde_json::from_str(&line).map_err(|e| AnalysisError::Parse {
                path: path.to_path_buf(),
                line: n + 1,
                message: e.to_string(),
            })?;
            ids.push(parsed.id);
            rows.push(parsed.vector);
        }
        Self::new(ids, rows, FeatureSource::ImportedEmbeddings)
    }

    /// Reorders rows to follow the corpus sample order, dropping vectors of
    /// ids the corpus does not contain.
    pub fn aligned_to(&self, corpus: &Corpus) -> Result<Self, AnalysisError> {
        let index: HashMap<&str, usize> = self.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let mut ids = Vec::with_capacity(corpus.len());
        let mut rows = Vec::with_capacity(corpus.len());
        for s in &corpus.samples {
            let &i = index.get(s.id.as_str()).ok_or_else(|| AnalysisError::MissingFeatures(s.id.clone()))?;
            ids.push(s.id.clone());
            rows.push(self.rows[i].clone());
        }
        Ok(Self { ids, rows, dim: self.dim, source: self.source })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn source(&self) -> FeatureSource {
        self.source
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewPoint {
    pub id: String,
    pub emotion: usize,
    pub coords: Vec<f64>,
}

/// The samples of one veracity label with their projected coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegitimacyView {
    pub label: u8,
    pub points: Vec<ViewPoint>,
    /// Sample count per emotion class of the scheme.
    pub histogram: Vec<usize>,
}

impl LegitimacyView {
    /// Share of the view per emotion class; all zeros for an empty view.
    pub fn proportions(&self) -> Vec<f64> {
        let n = self.points.len();
        self.histogram.iter().map(|&c| if n == 0 { 0.0 } else { c as f64 / n as f64 }).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegitimacyViews {
    pub scheme: EmotionScheme,
    /// Index 0 holds label 0 (non-rumour/real), index 1 label 1.
    pub views: [LegitimacyView; 2],
}

/// Partitions the projected corpus by veracity label, tagging each point
/// with its emotion class under `scheme`.
pub fn legitimacy_emotion_view(
    corpus: &Corpus,
    ids: &[String],
    coords: &[Vec<f64>],
    scheme: EmotionScheme,
) -> Result<LegitimacyViews, AnalysisError> {
    if ids.len() != coords.len() {
        return Err(AnalysisError::InvalidInput(format!("{} ids for {} coordinate rows", ids.len(), coords.len())));
    }
    let index: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let empty = |label| LegitimacyView { label, points: Vec::new(), histogram: vec![0; scheme.n()] };
    let mut views = [empty(0), empty(1)];
    for s in &corpus.samples {
        let emotion = s.emotion(scheme).ok_or_else(|| AnalysisError::MissingEmotion { id: s.id.clone(), scheme })?;
        let &i = index.get(s.id.as_str()).ok_or_else(|| AnalysisError::MissingFeatures(s.id.clone()))?;
        let view = &mut views[s.label as usize];
        view.histogram[emotion] += 1;
        view.points.push(ViewPoint { id: s.id.clone(), emotion, coords: coords[i].clone() });
    }
    Ok(LegitimacyViews { scheme, views })
}
