//! Emotion schemes and corpus annotation, either from a token lexicon or
//! from imported per-sample tags.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::corpus::{Corpus, Preprocessor};

const BUILTIN_LEXICON: &str = include_str!("../data/emotion_lexicon.tsv");

const EKMAN_CLASSES: [&str; 6] = ["joy", "surprise", "anger", "sadness", "disgust", "fear"];
const PLUTCHIK_CLASSES: [&str; 8] = ["joy", "surprise", "trust", "anger", "anticipation", "sadness", "disgust", "fear"];

/// Class index used when a text matches no lexicon entry (joy in both schemes).
pub const DEFAULT_CLASS: usize = 0;

#[derive(Debug, Error)]
pub enum EmotionError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("unknown {scheme} class `{class}`")]
    UnknownClass { scheme: EmotionScheme, class: String },
    #[error("unknown emotion scheme `{0}`")]
    UnknownScheme(String),
    #[error("duplicate id `{0}` in annotation file")]
    DuplicateId(String),
    #[error("annotation file has no tag for {} sample(s): {}", .0.len(), .0.join(", "))]
    MissingIds(Vec<String>),
    #[error("annotation file is for {found}, expected {expected}")]
    SchemeMismatch { expected: EmotionScheme, found: EmotionScheme },
    #[error("annotator configuration: {0}")]
    Config(String),
}

/// A fixed, ordered set of basic emotion classes. The class order is part
/// of every file format that stores indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EmotionScheme {
    Ekman6,
    Plutchik8,
}

impl EmotionScheme {
    pub const ALL: [EmotionScheme; 2] = [EmotionScheme::Ekman6, EmotionScheme::Plutchik8];

    pub fn classes(self) -> &'static [&'static str] {
        match self {
            EmotionScheme::Ekman6 => &EKMAN_CLASSES,
            EmotionScheme::Plutchik8 => &PLUTCHIK_CLASSES,
        }
    }

    pub fn n(self) -> usize {
        self.classes().len()
    }

    pub fn name(self) -> &'static str {
        match self {
            EmotionScheme::Ekman6 => "Ekman6",
            EmotionScheme::Plutchik8 => "Plutchik8",
        }
    }

    /// Accepts the canonical names plus the short forms `ekman`/`plutchik`.
    pub fn parse(s: &str) -> Result<Self, EmotionError> {
        match s.to_ascii_lowercase().as_str() {
            "ekman6" | "ekman" => Ok(EmotionScheme::Ekman6),
            "plutchik8" | "plutchik" => Ok(EmotionScheme::Plutchik8),
            _ => Err(EmotionError::UnknownScheme(s.to_string())),
        }
    }

    pub fn index_of(self, class: &str) -> Result<usize, EmotionError> {
        let lower = class.trim().to_lowercase();
        self.classes()
            .iter()
            .position(|c| *c == lower)
            .ok_or_else(|| EmotionError::UnknownClass { scheme: self, class: class.to_string() })
    }

    pub fn class_name(self, index: usize) -> Option<&'static str> {
        self.classes().get(index).copied()
    }
}

impl fmt::Display for EmotionScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Token → (scheme, class) associations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EmotionLexicon {
    entries: BTreeMap<String, Vec<(EmotionScheme, usize)>>,
}

impl EmotionLexicon {
    /// The small demonstration lexicon bundled with the crate.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_LEXICON, Path::new("<builtin>")).expect("builtin lexicon is well formed")
    }

    pub fn from_file(path: &Path) -> Result<Self, EmotionError> {
        let text = std::fs::read_to_string(path).map_err(|source| EmotionError::Io { path: path.into(), source })?;
        Self::parse(&text, path)
    }

    /// Parses `token<TAB>scheme<TAB>class_name` lines.
    pub fn parse(text: &str, origin: &Path) -> Result<Self, EmotionError> {
        let mut lexicon = Self::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| EmotionError::Parse { path: origin.into(), line: i + 1, message };
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            let [token, scheme, class] = fields.as_slice() else {
                return Err(err("expected `token<TAB>scheme<TAB>class_name`".into()));
            };
            let scheme = EmotionScheme::parse(scheme).map_err(|e| err(e.to_string()))?;
            let class = scheme.index_of(class).map_err(|e| err(e.to_string()))?;
            lexicon.insert(token, scheme, class);
        }
        Ok(lexicon)
    }

    pub fn insert(&mut self, token: &str, scheme: EmotionScheme, class: usize) {
        assert!(class < scheme.n(), "class index {class} out of range for {scheme}");
        let assoc = self.entries.entry(token.to_lowercase()).or_default();
        if !assoc.contains(&(scheme, class)) {
            assoc.push((scheme, class));
        }
    }

    pub fn associations(&self, token: &str) -> &[(EmotionScheme, usize)] {
        self.entries.get(token).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Tokens associated with `class` under `scheme`, in lexicographic order.
    pub fn words_for(&self, scheme: EmotionScheme, class: usize) -> Vec<&str> {
        self.entries.iter().filter(|(_, a)| a.contains(&(scheme, class))).map(|(t, _)| t.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Outcome of annotating one text with a lexicon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LexiconMatch {
    pub class: usize,
    /// Tokens that matched at least one class of the scheme.
    pub matched: usize,
}

/// Argmax over per-class matched-token counts, ties to the lowest index.
/// With no match the result is `default_class` with `matched == 0`.
pub fn lexicon_annotate(
    tokens: &[String],
    lexicon: &EmotionLexicon,
    scheme: EmotionScheme,
    default_class: usize,
) -> LexiconMatch {
    let mut counts = vec![0usize; scheme.n()];
    let mut matched = 0;
    for tok in tokens {
        let mut hit = false;
        for &(s, class) in lexicon.associations(tok) {
            if s == scheme {
                counts[class] += 1;
                hit = true;
            }
        }
        matched += usize::from(hit);
    }
    if matched == 0 {
        return LexiconMatch { class: default_class, matched: 0 };
    }
    let best = counts.iter().copied().max().unwrap_or(0);
    let class = counts.iter().position(|&c| c == best).unwrap_or(default_class);
    LexiconMatch { class, matched }
}

#[derive(Deserialize)]
struct ImportHeader {
    scheme: String,
}

/// Reads an annotation file: a `{"scheme": ...}` header line followed by
/// `{"id": str, "class": str|int}` lines.
pub fn read_annotations(path: &Path, scheme: EmotionScheme) -> Result<HashMap<String, usize>, EmotionError> {
    let file = std::fs::File::open(path).map_err(|source| EmotionError::Io { path: path.into(), source })?;
    let mut tags = HashMap::new();
    let mut header_seen = false;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| EmotionError::Io { path: path.into(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| EmotionError::Parse { path: path.into(), line: i + 1, message };
        if !header_seen {
            let header: ImportHeader = serde_json::from_str(&line).map_err(|e| err(format!("bad header: {e}")))?;
            let found = EmotionScheme::parse(&header.scheme).map_err(|e| err(e.to_string()))?;
            if found != scheme {
                return Err(EmotionError::SchemeMismatch { expected: scheme, found });
            }
            header_seen = true;
            continue;
        }
        let value: Value = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
        let id = value.get("id").and_then(Value::as_str).ok_or_else(|| err("missing string `id`".into()))?;
        let class = match value.get("class") {
            Some(Value::String(name)) => scheme.index_of(name)?,
            Some(Value::Number(n)) => match n.as_u64() {
                Some(i) if (i as usize) < scheme.n() => i as usize,
                _ => return Err(EmotionError::UnknownClass { scheme, class: n.to_string() }),
            },
            _ => return Err(err("missing `class` (string or integer)".into())),
        };
        if tags.insert(id.to_string(), class).is_some() {
            return Err(EmotionError::DuplicateId(id.to_string()));
        }
    }
    if !header_seen {
        return Err(EmotionError::Parse { path: path.into(), line: 1, message: "missing scheme header".into() });
    }
    Ok(tags)
}

/// Tags every sample of `corpus` from an imported annotation file.
pub fn import_annotations(corpus: &Corpus, path: &Path, scheme: EmotionScheme) -> Result<Corpus, EmotionError> {
    let tags = read_annotations(path, scheme)?;
    apply_tags(corpus, &tags, scheme).map(|(c, _)| c)
}

fn apply_tags(
    corpus: &Corpus,
    tags: &HashMap<String, usize>,
    scheme: EmotionScheme,
) -> Result<(Corpus, usize), EmotionError> {
    let missing: Vec<String> =
        corpus.samples.iter().filter(|s| !tags.contains_key(&s.id)).map(|s| s.id.clone()).collect();
    if !missing.is_empty() {
        return Err(EmotionError::MissingIds(missing));
    }
    let ids: HashSet<&str> = corpus.samples.iter().map(|s| s.id.as_str()).collect();
    let extra = tags.keys().filter(|k| !ids.contains(k.as_str())).count();
    if extra > 0 {
        log::warn!("{extra} annotation(s) refer to ids not in corpus `{}`", corpus.name);
    }
    let mut out = corpus.clone();
    let mut overwritten = 0;
    for s in &mut out.samples {
        overwritten += usize::from(s.emotion(scheme).is_some());
        s.set_emotion(scheme, tags[&s.id]);
    }
    Ok((out, overwritten))
}

/// Where emotion tags come from.
#[derive(Debug, Clone)]
pub enum Annotator {
    Lexicon { lexicon: EmotionLexicon, preprocessor: Preprocessor, default_class: usize },
    Import(PathBuf),
}

impl Annotator {
    /// Builds an annotator from optional sources; exactly one must be given.
    pub fn from_sources(lexicon: Option<EmotionLexicon>, import: Option<PathBuf>) -> Result<Self, EmotionError> {
        match (lexicon, import) {
            (Some(_), Some(_)) => {
                Err(EmotionError::Config("lexicon and import sources cannot be mixed in one annotation".into()))
            }
            (None, None) => Err(EmotionError::Config("no annotation source given".into())),
            (Some(lexicon), None) => Ok(Annotator::lexicon(lexicon)),
            (None, Some(path)) => Ok(Annotator::Import(path)),
        }
    }

    pub fn lexicon(lexicon: EmotionLexicon) -> Self {
        Annotator::Lexicon { lexicon, preprocessor: Preprocessor::default(), default_class: DEFAULT_CLASS }
    }
}

/// Summary of one annotation pass.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnnotationReport {
    pub scheme: EmotionScheme,
    pub distribution: Vec<usize>,
    pub overwritten: usize,
    /// Samples that fell back to the default class (lexicon annotator only).
    pub unmatched: usize,
}

/// Tags every sample of `corpus` for `scheme`. Existing tags for the scheme
/// are overwritten with a warning.
pub fn annotate_corpus(
    corpus: &Corpus,
    annotator: &Annotator,
    scheme: EmotionScheme,
) -> Result<(Corpus, AnnotationReport), EmotionError> {
    let (out, overwritten, unmatched) = match annotator {
        Annotator::Import(path) => {
            let tags = read_annotations(path, scheme)?;
            let (out, overwritten) = apply_tags(corpus, &tags, scheme)?;
            (out, overwritten, 0)
        }
        Annotator::Lexicon { lexicon, preprocessor, default_class } => {
            let mut out = corpus.clone();
            let (mut overwritten, mut unmatched) = (0, 0);
            for s in &mut out.samples {
                let m = lexicon_annotate(&preprocessor.tokens(&s.text), lexicon, scheme, *default_class);
                overwritten += usize::from(s.emotion(scheme).is_some());
                unmatched += usize::from(m.matched == 0);
                s.set_emotion(scheme, m.class);
            }
            (out, overwritten, unmatched)
        }
    };
    if overwritten > 0 {
        log::warn!("overwrote {overwritten} existing {scheme} tag(s) in corpus `{}`", corpus.name);
    }
    let distribution = out.stats().emotion_distribution.remove(scheme.name()).unwrap_or_else(|| vec![0; scheme.n()]);
    Ok((out, AnnotationReport { scheme, distribution, overwritten, unmatched }))
}
