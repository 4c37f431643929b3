//! Acceptance checks. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.

use std::collections::{BTreeSet, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use emomtl::analysis::{fit_pca, legitimacy_emotion_view, project, FeatureMatrix, FeatureSource};
use emomtl::corpus::{
    encode_corpus, load_corpus, stratified_split, ContractionDict, Corpus, CorpusSchema, EncodedSample, Preprocessor,
    PAD_INDEX,
};
use emomtl::emotion::EmotionScheme;
use emomtl::engine::{grad_check, EngineError, Tape, Tensor, Var, DEFAULT_EPS};
use emomtl::experiment::{build_for, prepare_data, run_experiment, DataOptions};
use emomtl::metrics::{compute_metrics, evaluate, ConfusionMatrix};
use emomtl::models::{build_model, AuxTask, EncoderConfig, EncoderKind, MtlModel};
use emomtl::synth::{generate, generate_events, SynthConfig, PHEME9_EVENTS};
use emomtl::training::{
    batch_gradients, combined_loss, fit, sweep_alpha, sweep_csv, LossWeights, SweepConfig, TrainConfig,
};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn random(rng: &mut StdRng, shape: &[usize], scale: f64) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(-scale..scale)).collect()).unwrap()
}

fn project_sum(tape: &mut Tape, y: Var, weights: &Tensor) -> Result<Var, EngineError> {
    let w = tape.input(weights.clone());
    let p = tape.mul(y, w)?;
    tape.sum(p)
}

/// Distinct values away from zero, so relu and max-pool have no kink inside the step.
fn separated(rng: &mut StdRng, shape: &[usize]) -> Tensor {
    let n: usize = shape.iter().product();
    let mut levels: Vec<f64> = (0..n).map(|i| (i as f64 + 1.0) * 0.05 * if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        levels.swap(i, j);
    }
    Tensor::new(shape.to_vec(), levels).unwrap()
}

fn synth(n: usize, domain: &str, seed: u64) -> Corpus {
    generate(&SynthConfig { n, domain: domain.into(), seed, ..SynthConfig::default() }).unwrap().0
}

fn preprocessor() -> Preprocessor {
    Preprocessor::new(ContractionDict::builtin())
}

// ---------------------------------------------------------------- criterion 1

const GRAD_SEEDS: u64 = 20;
const GRAD_TOL: f64 = 1e-4;

fn primitive_errors() -> Result<Vec<(&'static str, f64)>, EngineError> {
    let mut worst: Vec<(&'static str, f64)> = Vec::new();
    let mut note = |name: &'static str, e: f64| match worst.iter_mut().find(|(n, _)| *n == name) {
        Some(slot) => slot.1 = slot.1.max(e),
        None => worst.push((name, e)),
    };
    for seed in 0..GRAD_SEEDS {
        let mut rng = StdRng::seed_from_u64(seed);

        let (rows, inp, out) = (rng.random_range(1..4), rng.random_range(1..6), rng.random_range(1..5));
        let (x, w, b) =
            (random(&mut rng, &[rows, inp], 1.0), random(&mut rng, &[inp, out], 1.0), random(&mut rng, &[out], 1.0));
        let proj = random(&mut rng, &[rows, out], 1.0);
        note(
            "dense",
            grad_check(
                |t, v| {
                    let (w, b) = (t.input(w.clone()), t.input(b.clone()));
                    let y = t.dense(v, w, b)?;
                    project_sum(t, y, &proj)
                },
                &x,
                DEFAULT_EPS,
            )?,
        );
        note(
            "dense",
            grad_check(
                |t, v| {
                    let (x, b) = (t.input(x.clone()), t.input(b.clone()));
                    let y = t.dense(x, v, b)?;
                    project_sum(t, y, &proj)
                },
                &w,
                DEFAULT_EPS,
            )?,
        );
        note(
            "dense",
            grad_check(
                |t, v| {
                    let (x, w) = (t.input(x.clone()), t.input(w.clone()));
                    let y = t.dense(x, w, v)?;
                    project_sum(t, y, &proj)
                },
                &b,
                DEFAULT_EPS,
            )?,
        );

        let (width, dim, filters) = (rng.random_range(1..4), rng.random_range(1..4), rng.random_range(1..4));
        let len = width + rng.random_range(0..4);
        let (x, w, b) = (
            random(&mut rng, &[len, dim], 1.0),
            random(&mut rng, &[filters, width, dim], 1.0),
            random(&mut rng, &[filters], 1.0),
        );
        let proj = random(&mut rng, &[len - width + 1, filters], 1.0);
        note(
            "conv1d",
            grad_check(
                |t, v| {
                    let (w, b) = (t.input(w.clone()), t.input(b.clone()));
                    let y = t.conv1d(v, w, b)?;
                    project_sum(t, y, &proj)
                },
                &x,
                DEFAULT_EPS,
            )?,
        );
        note(
            "conv1d",
            grad_check(
                |t, v| {
                    let (x, b) = (t.input(x.clone()), t.input(b.clone()));
                    let y = t.conv1d(x, v, b)?;
                    project_sum(t, y, &proj)
                },
                &w,
                DEFAULT_EPS,
            )?,
        );
        note(
            "conv1d",
            grad_check(
                |t, v| {
                    let (x, w) = (t.input(x.clone()), t.input(w.clone()));
                    let y = t.conv1d(x, w, v)?;
                    project_sum(t, y, &proj)
                },
                &b,
                DEFAULT_EPS,
            )?,
        );

        let (len, ch, width) = (rng.random_range(2..8), rng.random_range(1..4), rng.random_range(1..3));
        let x = separated(&mut rng, &[len, ch]);
        let proj = random(&mut rng, &[len, ch], 1.0);
        note(
            "relu",
            grad_check(
                |t, v| {
                    let y = t.relu(v)?;
                    project_sum(t, y, &proj)
                },
                &x,
                DEFAULT_EPS,
            )?,
        );
        let proj = random(&mut rng, &[len / width, ch], 1.0);
        note(
            "max_pool",
            grad_check(
                |t, v| {
                    let y = t.max_pool1d(v, width)?;
                    project_sum(t, y, &proj)
                },
                &x,
                DEFAULT_EPS,
            )?,
        );

        let (vocab, dim, len) = (rng.random_range(2..7), rng.random_range(1..5), rng.random_range(1..7));
        let ids: Vec<usize> = (0..len).map(|_| rng.random_range(0..vocab)).collect();
        let table = random(&mut rng, &[vocab, dim], 1.0);
        let proj = random(&mut rng, &[len, dim], 1.0);
        note(
            "embedding",
            grad_check(
                |t, v| {
                    let y = t.embedding_lookup(v, &ids)?;
                    project_sum(t, y, &proj)
                },
                &table,
                DEFAULT_EPS,
            )?,
        );
        let length = rng.random_range(0..=len);
        let x = random(&mut rng, &[len, dim], 1.0);
        let proj = random(&mut rng, &[dim], 1.0);
        note(
            "mean_pool",
            grad_check(
                |t, v| {
                    let y = t.mean_pool(v, length)?;
                    project_sum(t, y, &proj)
                },
                &x,
                DEFAULT_EPS,
            )?,
        );

        let (len, dim, units) = (rng.random_range(1..5), rng.random_range(1..4), rng.random_range(1..4));
        let length = rng.random_range(1..=len);
        let x = random(&mut rng, &[len, dim], 1.0);
        let wx = random(&mut rng, &[dim, 4 * units], 0.8);
        let wh = random(&mut rng, &[units, 4 * units], 0.8);
        let b = random(&mut rng, &[4 * units], 0.5);
        let proj = random(&mut rng, &[units], 1.0);
        let run = |t: &mut Tape, x: Var, wx: Var, wh: Var, b: Var| -> Result<Var, EngineError> {
            let h = t.lstm_sequence(x, wx, wh, b, length)?;
            project_sum(t, h, &proj)
        };
        note(
            "lstm",
            grad_check(
                |t, v| {
                    let (a, c, d) = (t.input(wx.clone()), t.input(wh.clone()), t.input(b.clone()));
                    run(t, v, a, c, d)
                },
                &x,
                DEFAULT_EPS,
            )?,
        );
        note(
            "lstm",
            grad_check(
                |t, v| {
                    let (a, c, d) = (t.input(x.clone()), t.input(wh.clone()), t.input(b.clone()));
                    run(t, a, v, c, d)
                },
                &wx,
                DEFAULT_EPS,
            )?,
        );
        note(
            "lstm",
            grad_check(
                |t, v| {
                    let (a, c, d) = (t.input(x.clone()), t.input(wx.clone()), t.input(b.clone()));
                    run(t, a, c, v, d)
                },
                &wh,
                DEFAULT_EPS,
            )?,
        );
        note(
            "lstm",
            grad_check(
                |t, v| {
                    let (a, c, d) = (t.input(x.clone()), t.input(wx.clone()), t.input(wh.clone()));
                    run(t, a, c, d, v)
                },
                &b,
                DEFAULT_EPS,
            )?,
        );

        let (rows, classes) = (rng.random_range(1..4), rng.random_range(2..7));
        let z = random(&mut rng, &[rows, classes], 3.0);
        let targets: Vec<usize> = (0..rows).map(|_| rng.random_range(0..classes)).collect();
        let proj = random(&mut rng, &[rows, classes], 1.0);
        note(
            "softmax",
            grad_check(
                |t, v| {
                    let p = t.softmax(v)?;
                    project_sum(t, p, &proj)
                },
                &z,
                DEFAULT_EPS,
            )?,
        );
        let probs = Tensor::new(vec![rows, classes], (0..rows * classes).map(|_| rng.random_range(0.1..1.0)).collect())
            .unwrap();
        note("cross_entropy", grad_check(|t, v| t.cross_entropy(v, &targets), &probs, DEFAULT_EPS)?);
        note(
            "softmax+cross_entropy",
            grad_check(
                |t, v| {
                    let p = t.softmax(v)?;
                    t.cross_entropy(p, &targets)
                },
                &z,
                DEFAULT_EPS,
            )?,
        );
    }
    Ok(worst)
}

/// Finite differences of the weighted two-head loss with respect to every
/// parameter entry of a small model.
fn composite_error(kind: EncoderKind, seed: u64) -> Result<f64, String> {
    let mut rng = StdRng::seed_from_u64(1000 + seed);
    let (vocab, max_len) = (9, 6);
    let encoder = EncoderConfig {
        cnn_filters: kind.has_cnn().then_some(3),
        cnn_width: kind.has_cnn().then_some(2),
        lstm_units: kind.has_lstm().then_some(3),
        ..EncoderConfig::new(kind, 4, max_len)
    };
    let mut model = build_model(&encoder, vocab, AuxTask::EmotionEkman, None, seed).map_err(err)?;
    // Spread the weights out so no relu or max-pool input sits near a kink.
    for (_, t) in model.params.iter_mut() {
        for v in t.data_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
    }
    let batch: Vec<EncodedSample> = (0..4)
        .map(|i| {
            let true_length = rng.random_range(1..=max_len);
            let mut token_ids: Vec<usize> = (0..true_length).map(|_| rng.random_range(2..vocab)).collect();
            token_ids.resize(max_len, PAD_INDEX);
            EncodedSample {
                id: format!("s{i}"),
                token_ids,
                true_length,
                label: rng.random_range(0..2),
                emotion_ekman: Some(rng.random_range(0..6)),
                emotion_plutchik: None,
                domain: None,
            }
        })
        .collect();
    let weights = LossWeights::new(rng.random_range(0.05..0.95)).map_err(err)?;
    let (grads, _) = batch_gradients(&model, &batch, &weights).map_err(err)?;
    let loss = |m: &MtlModel| batch_gradients(m, &batch, &weights).map(|(_, b)| b.total).map_err(err);
    let names: Vec<String> = model.params.names().map(str::to_owned).collect();
    let mut worst = 0.0f64;
    for name in names {
        let analytic = grads.get(&name).ok_or_else(|| format!("no gradient for {name}"))?.clone();
        for i in 0..analytic.len() {
            let base = model.params.get(&name).map_err(err)?.data()[i];
            model.params.get_mut(&name).map_err(err)?.data_mut()[i] = base + DEFAULT_EPS;
            let plus = loss(&model)?;
            model.params.get_mut(&name).map_err(err)?.data_mut()[i] = base - DEFAULT_EPS;
            let minus = loss(&model)?;
            model.params.get_mut(&name).map_err(err)?.data_mut()[i] = base;
            let numeric = (plus - minus) / (2.0 * DEFAULT_EPS);
            worst = worst.max((analytic.data()[i] - numeric).abs() / numeric.abs().max(1.0));
        }
    }
    Ok(worst)
}

fn criterion_gradients() -> Outcome {
    let start = Instant::now();
    let prims = primitive_errors().map_err(err)?;
    let kinds = [EncoderKind::MeanPool, EncoderKind::Cnn, EncoderKind::Lstm, EncoderKind::CnnLstm];
    let mut composite = 0.0f64;
    for seed in 0..GRAD_SEEDS {
        composite = composite.max(composite_error(kinds[seed as usize % kinds.len()], seed)?);
    }
    let elapsed = start.elapsed().as_secs_f64();
    let worst_prim = prims.iter().map(|(_, e)| *e).fold(0.0, f64::max);
    for (name, e) in &prims {
        ensure(*e <= GRAD_TOL, || format!("{name}: max relative error {e:.2e} > {GRAD_TOL:e}"))?;
    }
    ensure(composite <= GRAD_TOL, || format!("composite loss: max relative error {composite:.2e} > {GRAD_TOL:e}"))?;
    ensure(elapsed < 60.0, || format!("took {elapsed:.1}s (limit 60s)"))?;
    Ok(format!(
        "{} primitives + composite loss x {GRAD_SEEDS} seeds; max rel err primitives {worst_prim:.2e}, composite {composite:.2e}; {elapsed:.1}s",
        prims.len()
    ))
}

// ---------------------------------------------------------------- criterion 2

fn criterion_loss_weighting() -> Outcome {
    let grid = SweepConfig::default().grid().map_err(err)?;
    ensure(grid.len() == 13, || format!("grid has {} points", grid.len()))?;
    let mut rng = StdRng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for &alpha in &grid {
        let w = LossWeights::new(alpha).map_err(err)?;
        ensure(w.beta() == 1.0 - alpha, || format!("beta {} != 1 - {alpha}", w.beta()))?;
        for _ in 0..100 {
            let (le, lt) = (rng.random_range(0.0..5.0), rng.random_range(0.0..5.0));
            let b = combined_loss(le, lt, &w).map_err(err)?;
            worst = worst.max((b.total - (alpha * le + (1.0 - alpha) * lt)).abs());
        }
    }
    ensure(worst <= 1e-12, || format!("combined loss off by {worst:e}"))?;

    // The recorded training loss obeys the same weighting.
    let corpus = synth(64, "general", 2);
    let data = prepare_data(
        &corpus,
        &corpus,
        &preprocessor(),
        &DataOptions { max_len: 16, validation_fraction: 0.0, ..DataOptions::default() },
        2,
    )
    .map_err(err)?;
    let model =
        build_for(&EncoderConfig::new(EncoderKind::MeanPool, 8, 16), AuxTask::EmotionEkman, &data, 2).map_err(err)?;
    let mut tape_worst = 0.0f64;
    for &alpha in &grid {
        let w = LossWeights::new(alpha).map_err(err)?;
        let (_, b) = batch_gradients(&model, &data.train, &w).map_err(err)?;
        tape_worst = tape_worst.max((b.total - (alpha * b.loss_e + (1.0 - alpha) * b.loss_t)).abs());
    }
    ensure(tape_worst <= 1e-12, || format!("model loss off by {tape_worst:e}"))?;
    Ok(format!("13 grid points, beta == 1 - alpha exactly; max |total - (a*Le + b*Lt)| {worst:.1e} (formula), {tape_worst:.1e} (model)"))
}

// ---------------------------------------------------------------- criterion 3

fn criterion_zero_weight() -> Outcome {
    let corpus = synth(200, "general", 3);
    let opts = DataOptions { max_len: 16, validation_fraction: 0.0, ..DataOptions::default() };
    let data = prepare_data(&corpus, &corpus, &preprocessor(), &opts, 3).map_err(err)?;
    let encoder =
        EncoderConfig { cnn_filters: Some(6), cnn_width: Some(3), ..EncoderConfig::new(EncoderKind::Cnn, 8, 16) };
    let config = TrainConfig {
        epochs: 5,
        batch_size: 32,
        lr: 0.01,
        weights: LossWeights::new(0.0).map_err(err)?,
        seed: 3,
        ..TrainConfig::default()
    };

    let stl0 = build_for(&encoder, AuxTask::None, &data, 3).map_err(err)?;
    let mtl0 = build_for(&encoder, AuxTask::EmotionEkman, &data, 3).map_err(err)?;
    let first = &data.train[..config.batch_size];
    let (gs, _) = batch_gradients(&stl0, first, &config.weights).map_err(err)?;
    let (gm, _) = batch_gradients(&mtl0, first, &config.weights).map_err(err)?;
    for (name, g) in &gs {
        let other = gm.get(name).ok_or_else(|| format!("{name} missing from multi-task gradients"))?;
        let same = g.data().len() == other.data().len()
            && g.data().iter().zip(other.data()).all(|(a, b)| a.to_bits() == b.to_bits());
        ensure(same, || format!("step-1 gradient of {name} differs"))?;
    }

    let (mut stl, mut mtl) = (stl0, mtl0);
    let hs = fit(&mut stl, &data.train, &[], &config).map_err(err)?;
    let hm = fit(&mut mtl, &data.train, &[], &config).map_err(err)?;
    ensure(hs.history.len() == 5 && hm.history.len() == 5, || "expected 5 epochs each".into())?;
    let gap =
        hs.history.iter().zip(&hm.history).map(|(a, b)| (a.train.loss_t - b.train.loss_t).abs()).fold(0.0, f64::max);
    ensure(gap <= 1e-8, || format!("loss_t trajectories differ by {gap:e}"))?;
    Ok(format!("{} shared gradients bitwise equal at step 1; 5-epoch loss_t max gap {gap:.1e}", gs.len()))
}

// ---------------------------------------------------------------- criterion 4

fn criterion_metrics() -> Outcome {
    let mut rng = StdRng::seed_from_u64(4);
    for trial in 0..100 {
        let p1 = rng.random_range(0.0..1.0);
        let preds: Vec<usize> = (0..1000).map(|_| rng.random_bool(p1) as usize).collect();
        let labels: Vec<usize> = (0..1000).map(|_| rng.random_bool(0.5) as usize).collect();
        let (mut tp, mut tn, mut fp, mut fn_) = (0usize, 0usize, 0usize, 0usize);
        for (&p, &l) in preds.iter().zip(&labels) {
            if p == 1 && l == 1 {
                tp += 1;
            } else if p == 0 && l == 0 {
                tn += 1;
            } else if p == 1 {
                fp += 1;
            } else {
                fn_ += 1;
            }
        }
        let div = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let expected = [div(tp + tn, 1000), div(tp, tp + fp), div(tp, tp + fn_), div(2 * tp, 2 * tp + fp + fn_)];
        let m = evaluate(&preds, &labels).map_err(err)?;
        let got = [m.accuracy, m.precision, m.recall, m.f1];
        ensure(got == expected, || format!("trial {trial}: {got:?} != oracle {expected:?}"))?;
    }
    let m = compute_metrics(&ConfusionMatrix { tp: 3, tn: 2, fp: 1, fn_: 2 });
    let ok = (m.accuracy - 0.625).abs() < 1e-12
        && (m.precision - 0.75).abs() < 1e-12
        && (m.recall - 0.6).abs() < 1e-12
        && (m.f1 - 2.0 / 3.0).abs() < 1e-12;
    ensure(ok, || format!("worked example gave {m:?}"))?;
    Ok(format!(
        "100 x 1000 pairs equal to brute-force oracle; worked example {:.4}/{:.4}/{:.4}/{:.4}",
        m.accuracy, m.precision, m.recall, m.f1
    ))
}

// ---------------------------------------------------------------- criterion 5

fn criterion_sweep() -> Outcome {
    let corpus = synth(240, "general", 5);
    let (train, test) = stratified_split(&corpus, 0.2, 5).map_err(err)?;
    let data = prepare_data(&train, &test, &preprocessor(), &DataOptions { max_len: 16, ..DataOptions::default() }, 5)
        .map_err(err)?;
    let encoder = EncoderConfig::new(EncoderKind::MeanPool, 8, 16);
    let sweep = SweepConfig {
        base: TrainConfig { epochs: 2, batch_size: 32, lr: 0.01, seed: 5, ..TrainConfig::default() },
        ..SweepConfig::default()
    };
    let run = || -> Result<String, String> {
        let points = sweep_alpha(
            &sweep,
            || build_for(&encoder, AuxTask::EmotionEkman, &data, 5),
            &data.train,
            &data.validation,
            &data.test,
        )
        .map_err(err)?;
        ensure(points.len() == 13, || format!("{} runs", points.len()))?;
        Ok(sweep_csv(&points))
    };
    let (first, second) = (run()?, run()?);
    let rows = first.lines().count() - 1;
    ensure(rows == 13, || format!("CSV has {rows} data rows"))?;
    ensure(first == second, || "rerun produced a different CSV".into())?;
    let alphas: Vec<&str> = first.lines().skip(1).map(|l| l.split(',').next().unwrap_or("")).collect();
    ensure(alphas.first() == Some(&"0.200000") && alphas.last() == Some(&"0.800000"), || {
        format!("alpha column {alphas:?}")
    })?;
    Ok("13 runs, 13-row CSV (alpha 0.20..0.80), rerun byte-identical".into())
}

// ---------------------------------------------------------------- criterion 6

const GAIN_SEEDS: u64 = 5;

fn criterion_mtl_gain() -> Outcome {
    let start = Instant::now();
    let encoder = EncoderConfig::new(EncoderKind::MeanPool, 16, 16);
    let opts = DataOptions { max_len: 16, ..DataOptions::default() };
    let (mut stl_acc, mut mtl_acc) = (Vec::new(), Vec::new());
    for seed in 0..GAIN_SEEDS {
        let corpus = synth(1000, "general", seed);
        let (train, test) = stratified_split(&corpus, 0.2, seed).map_err(err)?;
        let data = prepare_data(&train, &test, &preprocessor(), &opts, seed).map_err(err)?;
        let base = TrainConfig { epochs: 10, batch_size: 32, lr: 0.01, seed, ..TrainConfig::default() };
        let stl = run_experiment(&encoder, AuxTask::None, &data, &base).map_err(err)?;
        let mtl_cfg = TrainConfig { weights: LossWeights::new(0.4).map_err(err)?, ..base };
        let mtl = run_experiment(&encoder, AuxTask::EmotionEkman, &data, &mtl_cfg).map_err(err)?;
        stl_acc.push(stl.test.metrics.accuracy);
        mtl_acc.push(mtl.test.metrics.accuracy);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (s, m) = (mean(&stl_acc), mean(&mtl_acc));
    let elapsed = start.elapsed().as_secs_f64();
    let detail = format!(
        "mean accuracy STL {s:.4}, MTL(Ekman, a=0.4) {m:.4}, diff {:+.4} over {GAIN_SEEDS} seeds; {elapsed:.1}s",
        m - s
    );
    ensure(stl_acc.iter().chain(&mtl_acc).all(|&a| a >= 0.70), || {
        format!("a run fell below 0.70: STL {stl_acc:?} MTL {mtl_acc:?}")
    })?;
    ensure(m - s >= 0.0, || detail.clone())?;
    ensure(elapsed < 300.0, || format!("took {elapsed:.1}s (limit 300s)"))?;
    Ok(detail)
}

// ---------------------------------------------------------------- criterion 7

fn criterion_cross_domain() -> Outcome {
    let pre = preprocessor();
    let a = synth(1000, "politics", 71);
    let b = synth(1000, "celebrity", 72);
    let (a_train, a_test) = stratified_split(&a, 0.2, 7).map_err(err)?;
    let opts = DataOptions { max_len: 16, ..DataOptions::default() };
    let in_domain = prepare_data(&a_train, &a_test, &pre, &opts, 7).map_err(err)?;
    let cross = prepare_data(&a_train, &b, &pre, &opts, 7).map_err(err)?;

    let tokens_of = |v: &emomtl::corpus::Vocabulary| v.corpus_tokens().map(str::to_owned).collect::<Vec<_>>();
    ensure(tokens_of(&in_domain.vocab) == tokens_of(&cross.vocab), || "vocabulary depends on the test corpus".into())?;
    let size = cross.vocab.len();
    let re_encoded = encode_corpus(&b, &pre, &cross.vocab, opts.max_len).map_err(err)?;
    ensure(cross.vocab.len() == size && re_encoded == cross.test, || {
        "encoding the test corpus changed the vocabulary".into()
    })?;
    let b_only: BTreeSet<String> =
        b.samples.iter().flat_map(|s| pre.tokens(&s.text)).filter(|t| cross.vocab.get(t).is_none()).collect();

    let encoder = EncoderConfig::new(EncoderKind::MeanPool, 16, 16);
    let base = TrainConfig { epochs: 10, batch_size: 32, lr: 0.01, seed: 7, ..TrainConfig::default() };
    let mut parts = Vec::new();
    for (aux, config) in [
        (AuxTask::None, base.clone()),
        (AuxTask::EmotionEkman, TrainConfig { weights: LossWeights::new(0.4).map_err(err)?, ..base.clone() }),
    ] {
        let outcome = run_experiment(&encoder, aux, &in_domain, &config).map_err(err)?;
        let inside = outcome.test.metrics.accuracy;
        let predictions = outcome.model.predict_batch(&cross.test, 256).map_err(err)?;
        let labels: Vec<usize> = cross.test.iter().map(|s| s.label as usize).collect();
        let outside = evaluate(&predictions, &labels).map_err(err)?.accuracy;
        let name = aux.setting();
        ensure(outside < inside, || {
            format!("{name}: cross-domain accuracy {outside:.4} is not below in-domain {inside:.4}")
        })?;
        parts.push(format!("{name} {inside:.4} -> {outside:.4}"));
    }
    Ok(format!(
        "{}; vocab sealed at {size} entries, {} unseen test tokens map to <unk>",
        parts.join(", "),
        b_only.len()
    ))
}

// ---------------------------------------------------------------- criterion 8

fn principal_angle_max(a: &[Vec<f64>], b: &[Vec<f64>], dim: usize) -> f64 {
    let k = a.len();
    let qa = DMatrix::from_fn(dim, k, |r, c| a[c][r]);
    let qb = DMatrix::from_fn(dim, k, |r, c| b[c][r]);
    let m = qa.transpose() * qb;
    m.singular_values().iter().map(|s| s.clamp(-1.0, 1.0).acos()).fold(0.0, f64::max)
}

fn criterion_pca() -> Outcome {
    let mut rng = StdRng::seed_from_u64(8);
    let (mut worst_angle, mut worst_var, mut worst_ortho) = (0.0f64, 0.0f64, 0.0f64);
    let mut trials = 0;
    for trial in 0..60 {
        let n = rng.random_range(2..=20);
        let d = rng.random_range(1..=10);
        let max_k = (n - 1).min(d);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
        let ids: Vec<String> = (0..n).map(|i| format!("r{i}")).collect();
        let fm = FeatureMatrix::new(ids, rows.clone(), FeatureSource::ImportedEmbeddings).map_err(err)?;

        let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
        let x = DMatrix::from_fn(n, d, |i, j| rows[i][j] - mean[j]);
        let cov = (x.transpose() * &x) / (n as f64 - 1.0);
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

        for k in BTreeSet::from([1.min(max_k), 3.min(max_k), max_k]) {
            // Skip subspaces whose boundary eigenvalue is (nearly) repeated.
            if k < d && (eig.eigenvalues[order[k - 1]] - eig.eigenvalues[order[k]]).abs() < 1e-3 {
                continue;
            }
            let pca = fit_pca(&fm, k).map_err(|e| format!("trial {trial} n={n} d={d} k={k}: {e}"))?;
            let oracle: Vec<Vec<f64>> =
                order[..k].iter().map(|&c| eig.eigenvectors.column(c).iter().copied().collect()).collect();
            worst_angle = worst_angle.max(principal_angle_max(&pca.components, &oracle, d));
            for (i, &c) in order[..k].iter().enumerate() {
                worst_var = worst_var.max((pca.explained_variance[i] - eig.eigenvalues[c]).abs());
            }
            for i in 0..k {
                for j in 0..k {
                    let dot: f64 = pca.components[i].iter().zip(&pca.components[j]).map(|(a, b)| a * b).sum();
                    worst_ortho = worst_ortho.max((dot - if i == j { 1.0 } else { 0.0 }).abs());
                }
            }
            trials += 1;
        }
    }
    ensure(worst_angle <= 1e-6, || format!("principal angle {worst_angle:e} > 1e-6"))?;
    ensure(worst_var <= 1e-8, || format!("variance error {worst_var:e} > 1e-8"))?;
    ensure(worst_ortho <= 1e-8, || format!("orthonormality error {worst_ortho:e} > 1e-8"))?;

    let corpus = synth(60, "general", 8);
    let ids: Vec<String> = corpus.samples.iter().map(|s| s.id.clone()).collect();
    let rows: Vec<Vec<f64>> = (0..ids.len()).map(|_| (0..6).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let fm = FeatureMatrix::new(ids.clone(), rows, FeatureSource::ImportedEmbeddings).map_err(err)?;
    let pca = fit_pca(&fm, 3).map_err(err)?;
    let coords = project(fm.rows(), &pca).map_err(err)?;
    for scheme in EmotionScheme::ALL {
        let views = legitimacy_emotion_view(&corpus, &ids, &coords, scheme).map_err(err)?;
        let mut seen = HashSet::new();
        for view in &views.views {
            for p in &view.points {
                let sample =
                    corpus.samples.iter().find(|s| s.id == p.id).ok_or_else(|| format!("unknown id {}", p.id))?;
                ensure(sample.label == view.label, || format!("{} placed in the wrong view", p.id))?;
                ensure(seen.insert(p.id.clone()), || format!("{} appears twice", p.id))?;
            }
        }
        ensure(seen.len() == corpus.len(), || format!("{} of {} samples placed", seen.len(), corpus.len()))?;
    }
    Ok(format!(
        "{trials} fits up to 20x10: max principal angle {worst_angle:.1e}, variance err {worst_var:.1e}, orthonormality err {worst_ortho:.1e}; views partition the corpus"
    ))
}

// ---------------------------------------------------------------- criterion 9

fn criterion_fixture() -> Outcome {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/pheme9_counts.jsonl");
    let corpus = load_corpus(&path, &CorpusSchema::default()).map_err(err)?;
    let stats = corpus.stats();
    let rumours = corpus.samples.iter().filter(|s| s.label == 1).count();
    let non_rumours = corpus.samples.iter().filter(|s| s.label == 0).count();
    ensure((rumours, non_rumours, corpus.len()) == (2402, 4023, 6425), || {
        format!("counts {rumours}/{non_rumours}/{} (stats {stats:?})", corpus.len())
    })?;
    for (event, r, nr) in PHEME9_EVENTS {
        let of =
            |label| corpus.samples.iter().filter(|s| s.event.as_deref() == Some(event) && s.label == label).count();
        ensure((of(1), of(0)) == (r, nr), || {
            format!("{event}: {}/{} rumours/non-rumours, expected {r}/{nr}", of(1), of(0))
        })?;
    }
    let fresh = generate_events(&PHEME9_EVENTS, &SynthConfig { domain: "pheme".into(), ..SynthConfig::default() })
        .map_err(err)?
        .0;
    ensure(fresh.samples == corpus.samples, || "bundled fixture differs from freshly generated output".into())?;
    Ok("2402 rumours / 4023 non-rumours / 6425 total, per-event counts match, fixture reproducible".into())
}

// ---------------------------------------------------------------- criterion 10

fn random_text(rng: &mut StdRng) -> String {
    const PIECES: &[&str] = &[
        "I'll",
        "can't",
        "WON'T",
        "it's",
        "they're",
        "Don't",
        "y'all",
        "o'clock",
        "hello",
        "World",
        "rumour",
        "2024",
        "3rd",
        "#breaking",
        "@user",
        "http://t.co/x1",
        "e-mail",
        "naïve",
        "ÉCOLE",
        "straße",
        "...",
        "?!",
        "--",
        "(",
        ")",
        "\"",
        "'",
        "’",
        "\t",
        "\n",
        "  ",
        "é",
        "Ünïcödé",
        "ΣΊΣΥΦΟΣ",
        "日本",
        "x_y",
        "a.b",
        "don’t",
    ];
    let n = rng.random_range(0..12);
    let mut s = String::new();
    for _ in 0..n {
        if rng.random_bool(0.3) {
            let len = rng.random_range(1..6);
            s.extend((0..len).map(|_| char::from_u32(rng.random_range(0x20..0x250)).unwrap_or('?')));
        } else {
            s.push_str(PIECES[rng.random_range(0..PIECES.len())]);
        }
        if rng.random_bool(0.7) {
            s.push(' ');
        }
    }
    s
}

fn criterion_preprocessing() -> Outcome {
    let pre = preprocessor();
    let got = pre.tokens("I'll");
    ensure(got == ["i", "will"], || format!("\"I'll\" -> {got:?}"))?;
    let mut rng = StdRng::seed_from_u64(10);
    let mut total_tokens = 0;
    for _ in 0..1000 {
        let text = random_text(&mut rng);
        let once = pre.tokens(&text);
        let twice = pre.tokens(&once.join(" "));
        ensure(once == twice, || format!("not idempotent on {text:?}: {once:?} vs {twice:?}"))?;
        for t in &once {
            let bad = t.is_empty()
                || t.chars()
                    .any(|c| c.is_numeric() || c.is_ascii_punctuation() || !c.is_alphabetic() || c.is_uppercase());
            ensure(!bad, || format!("token {t:?} from {text:?} holds a digit, punctuation or uppercase"))?;
        }
        total_tokens += once.len();
    }
    Ok(format!("\"I'll\" -> [i, will]; 1000 random strings ({total_tokens} tokens) idempotent and clean"))
}

// ---------------------------------------------------------------------- main

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("gradient checks", criterion_gradients),
        ("loss weighting", criterion_loss_weighting),
        ("zero auxiliary weight equals single-task", criterion_zero_weight),
        ("metrics against oracle", criterion_metrics),
        ("default alpha sweep", criterion_sweep),
        ("multi-task gain", criterion_mtl_gain),
        ("cross-domain drop and sealed vocabulary", criterion_cross_domain),
        ("pca against eigen oracle", criterion_pca),
        ("bundled pheme-count fixture", criterion_fixture),
        ("preprocessing", criterion_preprocessing),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
