use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use emomtl::analysis::{emit_scatter, fit_pca, legitimacy_emotion_view, project, FeatureMatrix, FeatureSource};
use emomtl::corpus::{encode_corpus, load_corpus, Corpus, CorpusSchema, Preprocessor};
use emomtl::emotion::EmotionScheme;
use emomtl::models::Checkpoint;
use serde::Serialize;

use crate::error::{create_dir, write, CliError, CliResult};

/// Where the feature vectors come from.
pub enum Features {
    Embeddings(PathBuf),
    Checkpoint(PathBuf),
}

#[derive(Serialize)]
struct ViewSummary {
    label: u8,
    size: usize,
    histogram: BTreeMap<String, usize>,
    proportions: BTreeMap<String, f64>,
}

#[derive(Serialize)]
struct PcaSummary {
    source: FeatureSource,
    source_description: &'static str,
    samples: usize,
    dim: usize,
    explained_variance: Vec<f64>,
    explained_ratio: Vec<f64>,
    views: BTreeMap<String, Vec<ViewSummary>>,
}

fn merged(paths: &[PathBuf]) -> CliResult<Corpus> {
    if paths.is_empty() {
        return Err(CliError::invalid("no corpus given"));
    }
    let corpora = paths.iter().map(|p| load_corpus(p, &CorpusSchema::default())).collect::<Result<Vec<_>, _>>()?;
    if corpora.len() == 1 {
        return Ok(corpora.into_iter().next().expect("one corpus"));
    }
    let name = corpora.iter().map(|c| c.name.as_str()).collect::<Vec<_>>().join("+");
    Ok(Corpus::new(name, corpora.into_iter().flat_map(|c| c.samples).collect())?)
}

fn features(corpus: &Corpus, source: &Features) -> CliResult<FeatureMatrix> {
    match source {
        Features::Embeddings(path) => {
            if !path.is_file() {
                return Err(CliError::invalid(format!("embeddings file {} does not exist", path.display())));
            }
            Ok(FeatureMatrix::from_embeddings_jsonl(path)?.aligned_to(corpus)?)
        }
        Features::Checkpoint(path) => {
            let (model, vocab) = Checkpoint::load(path)?.into_model()?;
            let vocab = vocab
                .ok_or_else(|| CliError::invalid(format!("checkpoint {} stores no vocabulary", path.display())))?;
            let encoded = encode_corpus(corpus, &Preprocessor::default(), &vocab, model.encoder.max_len)?;
            let rows = model.representations(&encoded, 256)?;
            let ids = encoded.into_iter().map(|s| s.id).collect();
            Ok(FeatureMatrix::new(ids, rows, FeatureSource::EncoderRepresentation)?)
        }
    }
}

/// Fits PCA over every sample of the given corpora and writes one scatter
/// CSV plus two SVGs (label 0, label 1) per emotion scheme.
pub fn cmd_pca(
    corpora: &[PathBuf],
    source: &Features,
    schemes: &[EmotionScheme],
    k: usize,
    out_dir: &Path,
) -> CliResult<Vec<PathBuf>> {
    let corpus = merged(corpora)?;
    for &scheme in schemes {
        let schema = CorpusSchema {
            require_ekman: scheme == EmotionScheme::Ekman6,
            require_plutchik: scheme == EmotionScheme::Plutchik8,
            require_domain: false,
        };
        corpus.check_schema(&schema).map_err(|e| CliError::invalid(format!("corpus `{}`: {e}", corpus.name)))?;
    }
    let fm = features(&corpus, source)?;
    let pca = fit_pca(&fm, k)?;
    let coords = project(fm.rows(), &pca)?;
    create_dir(out_dir)?;

    let mut written = Vec::new();
    let mut views_summary = BTreeMap::new();
    for &scheme in schemes {
        let views = legitimacy_emotion_view(&corpus, fm.ids(), &coords, scheme)?;
        let files = emit_scatter(&views, out_dir, fm.source())?;
        written.push(files.csv);
        written.extend(files.svgs);
        let classes = scheme.classes();
        let summary = views
            .views
            .iter()
            .map(|v| ViewSummary {
                label: v.label,
                size: v.points.len(),
                histogram: classes.iter().map(|c| c.to_string()).zip(v.histogram.iter().copied()).collect(),
                proportions: classes.iter().map(|c| c.to_string()).zip(v.proportions()).collect(),
            })
            .collect();
        views_summary.insert(scheme.name().to_string(), summary);
    }
    let summary = PcaSummary {
        source: fm.source(),
        source_description: fm.source().describe(),
        samples: fm.len(),
        dim: fm.dim(),
        explained_ratio: pca.explained_ratio(),
        explained_variance: pca.explained_variance.clone(),
        views: views_summary,
    };
    let path = out_dir.join("pca.json");
    write(&path, serde_json::to_string_pretty(&summary).expect("summary serialises") + "\n")?;
    written.push(path);
    Ok(written)
}
