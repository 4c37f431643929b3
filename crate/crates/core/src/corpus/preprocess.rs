//! Text cleaning: lowercase, contraction expansion, character filtering and
//! whitespace tokenization.

use std::collections::HashMap;
use std::path::Path;

use super::CorpusError;

const BUILTIN_CONTRACTIONS: &str = include_str!("../../data/contractions.tsv");

/// Contraction dictionary. Exact entries match whole tokens; suffix rules
/// (keys written as `*suffix` in the file) match any token ending in the
/// suffix and replace only the suffix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContractionDict {
    exact: HashMap<String, String>,
    suffixes: Vec<(String, String)>,
}

impl ContractionDict {
    /// The dictionary shipped with the crate.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_CONTRACTIONS).expect("builtin contraction dictionary is well formed")
    }

    pub fn from_file(path: &Path) -> Result<Self, CorpusError> {
        let text = std::fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
        Self::parse(&text)
    }

    /// Parses `contraction<TAB>expansion` lines. Blank lines and `#` comments
    /// are skipped.
    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        let mut exact = HashMap::new();
        let mut suffixes = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let trimmed = line.trim_end_matches('\r');
            if trimmed.trim().is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, expansion) = trimmed.split_once('\t').ok_or_else(|| CorpusError::Contraction {
                line: line_no,
                message: "expected `contraction<TAB>expansion`".into(),
            })?;
            let key = normalize_apostrophes(key.trim());
            let expansion = expansion.trim();
            if key != key.to_lowercase() {
                return Err(CorpusError::Contraction {
                    line: line_no,
                    message: format!("key `{key}` is not lowercase"),
                });
            }
            if expansion.is_empty() || !expansion.chars().all(|c| c == ' ' || (c.is_alphabetic() && !c.is_uppercase()))
            {
                return Err(CorpusError::Contraction {
                    line: line_no,
                    message: format!("expansion `{expansion}` must be lowercase letters and spaces"),
                });
            }
            match key.strip_prefix('*') {
                Some(suffix) if !suffix.is_empty() => suffixes.push((suffix.to_string(), expansion.to_string())),
                Some(_) => {
                    return Err(CorpusError::Contraction { line: line_no, message: "empty suffix rule".into() });
                }
                None => {
                    exact.insert(key, expansion.to_string());
                }
            }
        }
        // Longest suffix wins when several apply.
        suffixes.sort_by(|a, b| b.0.chars().count().cmp(&a.0.chars().count()).then_with(|| a.0.cmp(&b.0)));
        Ok(Self { exact, suffixes })
    }

    /// Expands one lowercase token core, if any rule applies.
    pub fn expand(&self, token: &str) -> Option<String> {
        if let Some(expansion) = self.exact.get(token) {
            return Some(expansion.clone());
        }
        self.suffixes.iter().find_map(|(suffix, expansion)| {
            token
                .strip_suffix(suffix.as_str())
                .filter(|stem| !stem.is_empty())
                .map(|stem| format!("{stem} {expansion}"))
        })
    }

    pub fn len(&self) -> usize {
        self.exact.len() + self.suffixes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Default for ContractionDict {
    fn default() -> Self {
        Self::builtin()
    }
}

fn normalize_apostrophes(s: &str) -> String {
    s.chars().map(|c| if matches!(c, '\u{2019}' | '\u{2018}' | '\u{02BC}' | '`') { '\'' } else { c }).collect()
}

/// Characters that survive cleaning: whitespace and non-uppercase letters.
/// Punctuation, digits, symbols and emoji are deleted.
fn keep_char(c: char) -> bool {
    c.is_whitespace() || (c.is_alphabetic() && !c.is_uppercase() && !c.is_numeric())
}

/// Runs the cleaning pipeline on `raw`: lowercase, expand contractions on
/// whole tokens, delete punctuation and digits, split on whitespace.
pub fn preprocess_text(raw: &str, dict: &ContractionDict) -> Vec<String> {
    let lowered = raw.to_lowercase();
    let mut expanded = String::with_capacity(lowered.len());
    for token in lowered.split_whitespace() {
        let token = normalize_apostrophes(token);
        let is_core = |c: char| c.is_alphanumeric() || c == '\'';
        let start = token.find(is_core).unwrap_or(token.len());
        let end = token.char_indices().rev().find(|&(_, c)| is_core(c)).map_or(start, |(i, c)| i + c.len_utf8());
        let (lead, core, trail) = (&token[..start], &token[start..end], &token[end..]);
        if !expanded.is_empty() {
            expanded.push(' ');
        }
        expanded.push_str(lead);
        match dict.expand(core) {
            Some(expansion) => {
                expanded.push(' ');
                expanded.push_str(&expansion);
                expanded.push(' ');
            }
            None => expanded.push_str(core),
        }
        expanded.push_str(trail);
    }
    let cleaned: String = expanded.chars().filter(|&c| keep_char(c)).collect();
    cleaned.split_whitespace().map(str::to_string).collect()
}

/// Reusable preprocessing pipeline bound to one contraction dictionary.
#[derive(Debug, Clone, Default)]
pub struct Preprocessor {
    dict: ContractionDict,
}

impl Preprocessor {
    pub fn new(dict: ContractionDict) -> Self {
        Self { dict }
    }

    pub fn tokens(&self, raw: &str) -> Vec<String> {
        preprocess_text(raw, &self.dict)
    }

    pub fn dict(&self) -> &ContractionDict {
        &self.dict
    }
}
