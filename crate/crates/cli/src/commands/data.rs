use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use emomtl::corpus::{
    build_vocab, load_corpus, stratified_split, write_corpus, ContractionDict, CorpusSchema, Preprocessor,
};
use emomtl::emotion::{annotate_corpus, Annotator, EmotionLexicon, EmotionScheme};
use emomtl::synth::{generate, generate_events, write_synth, SynthConfig, PHEME9_EVENTS};
use serde::Serialize;

use crate::error::{write, CliError, CliResult};

#[derive(Serialize)]
struct TokenLine<'a> {
    id: &'a str,
    label: u8,
    tokens: Vec<String>,
}

/// Writes the cleaned token lists of a corpus, and optionally its vocabulary.
pub fn cmd_preprocess(
    input: &Path,
    output: &Path,
    contractions: Option<&Path>,
    vocab_out: Option<&Path>,
    min_freq: usize,
    max_size: usize,
) -> CliResult<()> {
    let corpus = load_corpus(input, &CorpusSchema::default())?;
    let dict = match contractions {
        Some(p) => ContractionDict::from_file(p)?,
        None => ContractionDict::builtin(),
    };
    let pre = Preprocessor::new(dict);
    let io = |e: std::io::Error| CliError::runtime(format!("{}: {e}", output.display()));
    let mut out = BufWriter::new(std::fs::File::create(output).map_err(io)?);
    for s in &corpus.samples {
        let line = TokenLine { id: &s.id, label: s.label, tokens: pre.tokens(&s.text) };
        serde_json::to_writer(&mut out, &line).map_err(|e| CliError::runtime(format!("{}: {e}", output.display())))?;
        out.write_all(b"\n").map_err(io)?;
    }
    out.flush().map_err(io)?;
    if let Some(path) = vocab_out {
        let vocab = build_vocab(&corpus, &pre, min_freq, max_size);
        write(path, serde_json::to_string_pretty(&vocab).expect("vocabulary serialises") + "\n")?;
        eprintln!("vocabulary: {} entries", vocab.len());
    }
    eprintln!("preprocessed {} samples from `{}`", corpus.len(), corpus.name);
    Ok(())
}

/// Tags a corpus with one emotion scheme from a lexicon or an imported file.
pub fn cmd_annotate(
    input: &Path,
    output: &Path,
    scheme: EmotionScheme,
    lexicon: Option<&str>,
    import: Option<PathBuf>,
) -> CliResult<()> {
    let corpus = load_corpus(input, &CorpusSchema::default())?;
    let lexicon = match lexicon {
        Some("builtin") => Some(EmotionLexicon::builtin()),
        Some(path) => Some(EmotionLexicon::from_file(Path::new(path))?),
        None => None,
    };
    let annotator = Annotator::from_sources(lexicon, import)?;
    let (annotated, report) = annotate_corpus(&corpus, &annotator, scheme)?;
    write_corpus(&annotated, output)?;
    eprintln!("annotated {} samples for {scheme}", annotated.len());
    for (class, count) in scheme.classes().iter().zip(&report.distribution) {
        eprintln!("  {class:<13} {count}");
    }
    if report.unmatched > 0 {
        eprintln!("  {} sample(s) matched no lexicon word and got the default class", report.unmatched);
    }
    Ok(())
}

/// Generates a synthetic corpus (or the PHEME-counts fixture), optionally
/// writing a stratified train/test split next to it.
pub fn cmd_synth(cfg: &SynthConfig, output: &Path, pheme_counts: bool, split: Option<f64>) -> CliResult<()> {
    let (corpus, params) = if pheme_counts { generate_events(&PHEME9_EVENTS, cfg)? } else { generate(cfg)? };
    let params_path = write_synth(&corpus, &params, output)?;
    eprintln!("wrote {} samples to {} ({})", corpus.len(), output.display(), params_path.display());
    if let Some(fraction) = split {
        let (train, test) = stratified_split(&corpus, fraction, cfg.seed)?;
        let stem = output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        for (part, c) in [("train", &train), ("test", &test)] {
            let path = output.with_file_name(format!("{stem}-{part}.jsonl"));
            write_corpus(c, &path)?;
            eprintln!("wrote {} samples to {}", c.len(), path.display());
        }
    }
    Ok(())
}
