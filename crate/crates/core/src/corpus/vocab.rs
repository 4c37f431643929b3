//! Vocabulary construction and fixed-length encoding.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Corpus, CorpusError, Preprocessor, Sample};

pub const PAD_INDEX: usize = 0;
pub const UNK_INDEX: usize = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

pub const DEFAULT_MAX_SIZE: usize = 20_000;
pub const DEFAULT_MIN_FREQ: usize = 1;
pub const DEFAULT_MAX_LEN: usize = 64;

/// Token to index map with reserved padding (0) and unknown (1) slots.
///
/// A vocabulary has no insertion API: once built from a training corpus it
/// is sealed, so evaluation data can never add entries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    tokens: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
    max_size: usize,
    min_freq: usize,
}

impl Vocabulary {
    /// Builds a vocabulary from pre-tokenized texts. Tokens with frequency
    /// `>= min_freq` are ranked by (frequency desc, token asc) and truncated
    /// to `max_size - 2` entries after the reserved slots.
    pub fn from_token_lists<'a, I>(lists: I, min_freq: usize, max_size: usize) -> Self
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        let mut counts: HashMap<&'a str, usize> = HashMap::new();
        for list in lists {
            for tok in list {
                *counts.entry(tok.as_str()).or_insert(0) += 1;
            }
        }
        let mut ranked: Vec<(&str, usize)> = counts.into_iter().filter(|&(_, c)| c >= min_freq.max(1)).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked.truncate(max_size.saturating_sub(2));

        let mut tokens = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()];
        tokens.extend(ranked.into_iter().map(|(t, _)| t.to_string()));
        Self::from_parts(tokens, max_size.max(2), min_freq)
    }

    fn from_parts(tokens: Vec<String>, max_size: usize, min_freq: usize) -> Self {
        let index = tokens.iter().enumerate().skip(2).map(|(i, t)| (t.clone(), i)).collect();
        Self { tokens, index, max_size, min_freq }
    }

    /// Restores the lookup index after deserialization.
    pub fn reindex(mut self) -> Self {
        self.index = self.tokens.iter().enumerate().skip(2).map(|(i, t)| (t.clone(), i)).collect();
        self
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() <= 2
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    pub fn min_freq(&self) -> usize {
        self.min_freq
    }

    /// Index of a corpus token; `None` for out-of-vocabulary tokens.
    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn id(&self, token: &str) -> usize {
        self.get(token).unwrap_or(UNK_INDEX)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    /// Corpus tokens in index order (reserved slots excluded).
    pub fn corpus_tokens(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().skip(2).map(String::as_str)
    }

    /// Maps ids back to tokens, dropping padding.
    pub fn decode(&self, ids: &[usize]) -> Vec<String> {
        ids.iter().filter(|&&id| id != PAD_INDEX).map(|&id| self.token(id).unwrap_or(UNK_TOKEN).to_string()).collect()
    }
}

/// Builds a vocabulary over the preprocessed texts of `corpus`.
pub fn build_vocab(corpus: &Corpus, pre: &Preprocessor, min_freq: usize, max_size: usize) -> Vocabulary {
    let lists: Vec<Vec<String>> = corpus.samples.iter().map(|s| pre.tokens(&s.text)).collect();
    Vocabulary::from_token_lists(lists.iter().map(Vec::as_slice), min_freq, max_size)
}

/// A sample as fixed-length token ids plus its labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedSample {
    pub id: String,
    pub token_ids: Vec<usize>,
    pub true_length: usize,
    pub label: u8,
    pub emotion_ekman: Option<usize>,
    pub emotion_plutchik: Option<usize>,
    pub domain: Option<String>,
}

/// Maps tokens to ids, right-padding or truncating (keeping the prefix) to
/// exactly `max_len` ids.
pub fn encode_tokens(
    tokens: &[String],
    vocab: &Vocabulary,
    max_len: usize,
) -> Result<(Vec<usize>, usize), CorpusError> {
    if max_len == 0 {
        return Err(CorpusError::InvalidArgument("max_len must be positive".into()));
    }
    let mut ids: Vec<usize> = tokens.iter().take(max_len).map(|t| vocab.id(t)).collect();
    let true_length = ids.len();
    ids.resize(max_len, PAD_INDEX);
    Ok((ids, true_length))
}

pub fn encode(
    sample: &Sample,
    pre: &Preprocessor,
    vocab: &Vocabulary,
    max_len: usize,
) -> Result<EncodedSample, CorpusError> {
    let (token_ids, true_length) = encode_tokens(&pre.tokens(&sample.text), vocab, max_len)?;
    Ok(EncodedSample {
        id: sample.id.clone(),
        token_ids,
        true_length,
        label: sample.label,
        emotion_ekman: sample.emotion_ekman,
        emotion_plutchik: sample.emotion_plutchik,
        domain: sample.domain.clone(),
    })
}

pub fn encode_corpus(
    corpus: &Corpus,
    pre: &Preprocessor,
    vocab: &Vocabulary,
    max_len: usize,
) -> Result<Vec<EncodedSample>, CorpusError> {
    corpus.samples.iter().map(|s| encode(s, pre, vocab, max_len)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn vocab_of(texts: &[&str], min_freq: usize, max_size: usize) -> Vocabulary {
        let lists: Vec<Vec<String>> = texts.iter().map(|t| toks(t)).collect();
        Vocabulary::from_token_lists(lists.iter().map(Vec::as_slice), min_freq, max_size)
    }

    #[test]
    fn reserved_slots_then_frequency_order() {
        let v = vocab_of(&["a a b"], 1, 100);
        assert_eq!(v.len(), 4);
        assert_eq!(v.token(0), Some(PAD_TOKEN));
        assert_eq!(v.token(1), Some(UNK_TOKEN));
        assert_eq!(v.get("a"), Some(2));
        assert_eq!(v.get("b"), Some(3));
    }

    #[test]
    fn min_freq_filters() {
        let v = vocab_of(&["a a b"], 2, 100);
        assert_eq!(v.len(), 3);
        assert_eq!(v.get("a"), Some(2));
        assert_eq!(v.get("b"), None);
    }

    #[test]
    fn ties_break_lexicographically() {
        let v = vocab_of(&["b a b a"], 1, 100);
        assert_eq!(v.get("a"), Some(2));
        assert_eq!(v.get("b"), Some(3));
    }

    #[test]
    fn max_size_caps_total() {
        let v = vocab_of(&["a b c d e f"], 1, 4);
        assert_eq!(v.len(), 4);
        assert_eq!(v.corpus_tokens().collect::<Vec<_>>(), ["a", "b"]);
    }

    #[test]
    fn reserved_tokens_in_text_do_not_collide() {
        let v = vocab_of(&["<pad> <unk> x"], 1, 100);
        assert_eq!(v.get("<pad>"), Some(2));
        assert_eq!(v.id("x"), 4);
        assert!(v.corpus_tokens().all(|t| v.get(t).unwrap() >= 2));
    }

    #[test]
    fn encode_pads_and_truncates() {
        let v = vocab_of(&["i will go"], 1, 100);
        let (ids, len) = encode_tokens(&toks("i will"), &v, 4).unwrap();
        assert_eq!(ids, vec![v.id("i"), v.id("will"), 0, 0]);
        assert_eq!(len, 2);

        let (ids, _) = encode_tokens(&toks("zebra i"), &v, 3).unwrap();
        assert_eq!(ids[0], UNK_INDEX);

        let (ids, len) = encode_tokens(&toks("i will go i will"), &v, 3).unwrap();
        assert_eq!(ids, vec![v.id("i"), v.id("will"), v.id("go")]);
        assert_eq!(len, 3);

        assert!(encode_tokens(&toks("i"), &v, 0).is_err());
    }

    #[test]
    fn decode_round_trips_in_vocab_tokens() {
        let v = vocab_of(&["the cat sat"], 1, 100);
        let (ids, _) = encode_tokens(&toks("the cat sat"), &v, 6).unwrap();
        assert_eq!(v.decode(&ids), toks("the cat sat"));
        let (ids, _) = encode_tokens(&toks("the dog"), &v, 3).unwrap();
        assert_eq!(v.decode(&ids), toks("the <unk>"));
    }

    #[test]
    fn serde_round_trip_restores_index() {
        let v = vocab_of(&["x y y"], 1, 10);
        let json = serde_json::to_string(&v).unwrap();
        let back: Vocabulary = serde_json::from_str::<Vocabulary>(&json).unwrap().reindex();
        assert_eq!(back, v);
        assert_eq!(back.get("y"), Some(2));
    }
}
