use std::collections::BTreeMap;
use std::path::PathBuf;

use emomtl::analysis::{emit_sweep_plot, SweepSeries};
use emomtl::corpus::Preprocessor;
use emomtl::experiment::{build_for, prepare_data};
use emomtl::models::{AuxTask, EncoderConfig, EncoderKind};
use emomtl::training::{sweep_alpha, write_sweep_csv, SweepPoint};
use serde::Serialize;

use crate::config::{dataset_name, setting_slug, ExperimentConfig};
use crate::error::{create_dir, write, CliError, CliResult};

/// The config's encoder switched to `kind`, keeping shared sizes.
fn encoder_for(base: &EncoderConfig, kind: EncoderKind) -> EncoderConfig {
    if kind == base.kind {
        return base.clone();
    }
    EncoderConfig {
        kind,
        embedding_dim: base.embedding_dim,
        cnn_filters: if kind.has_cnn() { base.cnn_filters } else { None },
        cnn_width: if kind.has_cnn() { base.cnn_width } else { None },
        lstm_units: if kind.has_lstm() { base.lstm_units } else { None },
        max_len: base.max_len,
    }
    .with_defaults()
}

#[derive(Serialize)]
struct BestAlpha {
    alpha: f64,
    accuracy: f64,
}

/// Highest accuracy, ties to the smallest α.
fn best(points: &[SweepPoint]) -> BestAlpha {
    let p = points.iter().fold(&points[0], |b, p| if p.metrics.accuracy > b.metrics.accuracy { p } else { b });
    BestAlpha { alpha: p.alpha, accuracy: p.metrics.accuracy }
}

/// Runs the α grid for every requested encoder kind.
pub fn cmd_sweep(cfg: &ExperimentConfig, models: &[EncoderKind]) -> CliResult<PathBuf> {
    cfg.validate()?;
    let sweep = cfg.sweep.as_ref().ok_or_else(|| CliError::invalid("config has no `sweep` section"))?;
    if cfg.aux() == AuxTask::None {
        return Err(CliError::invalid("an α sweep needs an auxiliary task; `auxiliary` is \"none\""));
    }
    let kinds: Vec<EncoderKind> = if models.is_empty() { vec![cfg.encoder.kind] } else { models.to_vec() };
    let encoders: Vec<EncoderConfig> = kinds.iter().map(|&k| encoder_for(&cfg.encoder, k)).collect();
    for e in &encoders {
        e.validate()?;
    }

    let train = cfg.load_corpus(&cfg.train_path)?;
    let test = cfg.load_corpus(&cfg.test_path)?;
    let pre = Preprocessor::default();
    let data = prepare_data(&train, &test, &pre, &cfg.data_options(), cfg.seed)?;

    let dataset = dataset_name(&train.name);
    let dir = cfg.out_dir.join(format!("sweep-{dataset}-{}-seed{}", setting_slug(cfg.aux()), cfg.seed));
    create_dir(&dir)?;
    write(&dir.join("config.json"), cfg.snapshot())?;

    let mut series = Vec::new();
    let mut summary = BTreeMap::new();
    for enc in &encoders {
        let factory = || build_for(enc, cfg.aux(), &data, cfg.seed);
        let points = sweep_alpha(sweep, factory, &data.train, &data.validation, &data.test)?;
        let model_dir = dir.join(enc.kind.name());
        create_dir(&model_dir)?;
        write_sweep_csv(&points, &model_dir.join("sweep.csv"))?;
        let b = best(&points);
        println!("{}: best alpha {:.2} (accuracy {:.4})", enc.kind.label(), b.alpha, b.accuracy);
        summary.insert(enc.kind.label().to_string(), b);
        series.push(SweepSeries { name: enc.kind.label().to_string(), points });
    }
    emit_sweep_plot(&series, &dir.join("sweep.svg"), &dir.join("sweep_points.csv"))?;
    write(&dir.join("summary.json"), serde_json::to_string_pretty(&summary).expect("summary serialises") + "\n")?;
    Ok(dir)
}
