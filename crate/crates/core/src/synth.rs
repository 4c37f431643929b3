//! Synthetic veracity corpora with a planted emotion–legitimacy correlation.
//!
//! Each sample mixes label-independent topic words, one or two emotion
//! words from the bundled lexicon, and (sometimes) a label-specific style
//! word. The emotion class is drawn from a label-dependent pool with
//! probability `correlation`, uniformly otherwise; with probability
//! `label_noise` the text is generated for the opposite label, which caps
//! the achievable accuracy at `1 − label_noise`.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{write_corpus, Corpus, CorpusError, Sample};
use crate::emotion::{EmotionLexicon, EmotionScheme};
use crate::rng::named_stream;

pub const GENERATOR_VERSION: &str = "emomtl-synth/1";

/// Plutchik classes favoured by each label's texts (label 0, label 1).
pub const EMOTION_POOLS: [[&str; 4]; 2] =
    [["joy", "trust", "anger", "disgust"], ["surprise", "anticipation", "sadness", "fear"]];

const TOPIC_WORDS: usize = 40;
const STYLE_WORDS: usize = 6;

/// Per-event thread counts of the PHEME 9 collection: (event, rumours, non-rumours).
pub const PHEME9_EVENTS: [(&str, usize, usize); 9] = [
    ("charliehebdo", 458, 1621),
    ("sydneysiege", 522, 699),
    ("ferguson", 284, 859),
    ("ottawashooting", 470, 420),
    ("germanwings-crash", 238, 231),
    ("putinmissing", 126, 112),
    ("prince-toronto", 229, 4),
    ("gurlitt", 61, 77),
    ("ebola-essien", 14, 0),
];

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid generator configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n: usize,
    /// Fraction of samples labelled 1.
    pub rumour_fraction: f64,
    /// Probability that the emotion class comes from the label's pool.
    pub correlation: f64,
    /// Probability that a text is generated for the opposite of its label.
    pub label_noise: f64,
    /// Probability that a text carries a label-specific style word.
    pub style_rate: f64,
    /// Topic/style vocabulary key; corpora with different domains share only emotion words.
    pub domain: String,
    pub min_topic_words: usize,
    pub max_topic_words: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            rumour_fraction: 0.5,
            correlation: 0.8,
            label_noise: 0.1,
            style_rate: 0.5,
            domain: "general".into(),
            min_topic_words: 4,
            max_topic_words: 8,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        for (name, p) in [
            ("rumour_fraction", self.rumour_fraction),
            ("correlation", self.correlation),
            ("label_noise", self.label_noise),
            ("style_rate", self.style_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SynthError::Config(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        if self.min_topic_words == 0 || self.min_topic_words > self.max_topic_words {
            return Err(SynthError::Config("topic word range must satisfy 1 ≤ min ≤ max".into()));
        }
        if self.domain.trim().is_empty() {
            return Err(SynthError::Config("domain must not be empty".into()));
        }
        Ok(())
    }
}

/// Ground truth written next to a generated corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub generator: String,
    pub config: SynthConfig,
    pub label_counts: [usize; 2],
    /// Samples whose text was generated for the opposite label.
    pub flipped: usize,
    pub emotion_pools: [Vec<String>; 2],
    pub topic_words: Vec<String>,
    pub style_words: [Vec<String>; 2],
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<(String, usize, usize)>,
}

/// Pronounceable lowercase pseudo-words, fixed for a given key.
fn pseudo_words(key: &str, count: usize, taken: &mut BTreeSet<String>) -> Vec<String> {
    const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
    const VOWELS: &[u8] = b"aeiou";
    let mut rng = named_stream(0, &format!("synth/words/{key}"));
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let syllables = rng.random_range(2..=3);
        let word: String = (0..syllables)
            .flat_map(|_| [*CONSONANTS.choose(&mut rng).unwrap() as char, *VOWELS.choose(&mut rng).unwrap() as char])
            .collect();
        if taken.insert(word.clone()) {
            out.push(word);
        }
    }
    out
}

struct Vocab {
    topic: Vec<String>,
    style: [Vec<String>; 2],
    emotion_words: Vec<Vec<String>>,
}

impl Vocab {
    fn new(topic_key: &str, style_key: &str) -> Self {
        let lexicon = EmotionLexicon::builtin();
        let scheme = EmotionScheme::Plutchik8;
        let emotion_words: Vec<Vec<String>> =
            (0..scheme.n()).map(|c| lexicon.words_for(scheme, c).into_iter().map(String::from).collect()).collect();
        let mut taken: BTreeSet<String> = emotion_words.iter().flatten().cloned().collect();
        let topic = pseudo_words(&format!("topic/{topic_key}"), TOPIC_WORDS, &mut taken);
        let style = [
            pseudo_words(&format!("style0/{style_key}"), STYLE_WORDS, &mut taken),
            pseudo_words(&format!("style1/{style_key}"), STYLE_WORDS, &mut taken),
        ];
        Self { topic, style, emotion_words }
    }
}

fn ekman_of(plutchik_class: &str) -> usize {
    let name = match plutchik_class {
        "trust" => "joy",
        "anticipation" => "surprise",
        other => other,
    };
    EmotionScheme::Ekman6.index_of(name).expect("every Plutchik class maps onto Ekman")
}

/// Generates one sample with observed `label`; returns it and whether its text was flipped.
fn sample(id: String, label: u8, cfg: &SynthConfig, vocab: &Vocab, rng: &mut SplitMix64) -> (Sample, bool) {
    let flipped = rng.random_bool(cfg.label_noise);
    let text_label = if flipped { 1 - label } else { label } as usize;
    let plutchik = EmotionScheme::Plutchik8;
    let class_name = if rng.random_bool(cfg.correlation) {
        *EMOTION_POOLS[text_label].choose(rng).unwrap()
    } else {
        plutchik.classes()[rng.random_range(0..plutchik.n())]
    };
    let class = plutchik.index_of(class_name).unwrap();

    let mut tokens: Vec<String> = Vec::new();
    for _ in 0..rng.random_range(cfg.min_topic_words..=cfg.max_topic_words) {
        tokens.push(vocab.topic.choose(rng).unwrap().clone());
    }
    for _ in 0..1 + usize::from(rng.random_bool(0.5)) {
        tokens.push(vocab.emotion_words[class].choose(rng).unwrap().clone());
    }
    if rng.random_bool(cfg.style_rate) {
        tokens.push(vocab.style[text_label].choose(rng).unwrap().clone());
    }
    tokens.shuffle(rng);
    // Surface noise that preprocessing is expected to strip.
    if rng.random_bool(0.3) {
        tokens[0] = format!("#{}", tokens[0]);
    }
    if rng.random_bool(0.2) {
        tokens.push(rng.random_range(1..2025u32).to_string());
    }
    let mut text = tokens.join(" ");
    if let Some(first) = text.get(..1) {
        text = first.to_uppercase() + &text[1..];
    }
    text.push(*['.', '!', '?'].choose(rng).unwrap());

    let mut s = Sample::new(id, text, label);
    s.emotion_plutchik = Some(class);
    s.emotion_ekman = Some(ekman_of(class_name));
    s.domain = Some(cfg.domain.clone());
    (s, flipped)
}

fn labels(n_pos: usize, n: usize, rng: &mut SplitMix64) -> Vec<u8> {
    let mut labels: Vec<u8> = (0..n).map(|i| u8::from(i < n_pos)).collect();
    labels.shuffle(rng);
    labels
}

fn params(cfg: &SynthConfig, vocab: &Vocab, corpus: &Corpus, flipped: usize) -> SynthParams {
    let stats = corpus.stats();
    SynthParams {
        generator: GENERATOR_VERSION.into(),
        config: cfg.clone(),
        label_counts: stats.label_counts,
        flipped,
        emotion_pools: EMOTION_POOLS.map(|p| p.iter().map(|s| s.to_string()).collect()),
        topic_words: vocab.topic.clone(),
        style_words: vocab.style.clone(),
        events: Vec::new(),
    }
}

/// Generates `cfg.n` samples, `round(n · rumour_fraction)` of them labelled 1.
pub fn generate(cfg: &SynthConfig) -> Result<(Corpus, SynthParams), SynthError> {
    cfg.validate()?;
    let vocab = Vocab::new(&cfg.domain, &cfg.domain);
    let mut rng = named_stream(cfg.seed, &format!("synth/{}", cfg.domain));
    let n_pos = (cfg.n as f64 * cfg.rumour_fraction).round() as usize;
    let mut flipped = 0;
    let samples = labels(n_pos, cfg.n, &mut rng)
        .into_iter()
        .enumerate()
        .map(|(i, l)| {
            let (s, f) = sample(format!("{}-{i:05}", cfg.domain), l, cfg, &vocab, &mut rng);
            flipped += usize::from(f);
            s
        })
        .collect();
    let corpus = Corpus::new(format!("synth-{}", cfg.domain), samples)?;
    let params = params(cfg, &vocab, &corpus, flipped);
    Ok((corpus, params))
}

/// Generates a corpus with exact per-event label counts. Each event has its
/// own topic words; style words follow `cfg.domain`. `cfg.n` is ignored.
pub fn generate_events(
    events: &[(&str, usize, usize)],
    cfg: &SynthConfig,
) -> Result<(Corpus, SynthParams), SynthError> {
    cfg.validate()?;
    let mut samples = Vec::new();
    let mut flipped = 0;
    for &(event, rumours, non_rumours) in events {
        let vocab = Vocab::new(event, &cfg.domain);
        let mut rng = named_stream(cfg.seed, &format!("synth/event/{event}"));
        for (i, l) in labels(rumours, rumours + non_rumours, &mut rng).into_iter().enumerate() {
            let (mut s, f) = sample(format!("{event}-{i:05}"), l, cfg, &vocab, &mut rng);
            s.event = Some(event.to_string());
            flipped += usize::from(f);
            samples.push(s);
        }
    }
    let corpus = Corpus::new(format!("synth-{}", cfg.domain), samples)?;
    let mut p = params(cfg, &Vocab::new(&cfg.domain, &cfg.domain), &corpus, flipped);
    p.topic_words.clear();
    p.events = events.iter().map(|&(e, r, n)| (e.to_string(), r, n)).collect();
    Ok((corpus, p))
}

/// Path of the ground-truth file written next to `corpus_path`.
pub fn params_path(corpus_path: &Path) -> PathBuf {
    let stem = corpus_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    corpus_path.with_file_name(format!("{stem}.params.json"))
}

/// Writes the corpus as JSONL and its generation parameters next to it.
pub fn write_synth(corpus: &Corpus, params: &SynthParams, corpus_path: &Path) -> Result<PathBuf, SynthError> {
    write_corpus(corpus, corpus_path)?;
    let path = params_path(corpus_path);
    let json = serde_json::to_string_pretty(params).expect("params serialise");
    std::fs::write(&path, json + "\n").map_err(|source| SynthError::Io { path: path.clone(), source })?;
    Ok(path)
}
