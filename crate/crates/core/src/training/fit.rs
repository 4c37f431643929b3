use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{combined_loss, EarlyStoppingConfig, LossBreakdown, LossWeights, TrainConfig, TrainError};
use crate::corpus::EncodedSample;
use crate::engine::{adam_step, AdamConfig, AdamState, Tensor, Var};
use crate::metrics::{evaluate, multiclass_accuracy, MetricsReport};
use crate::models::{predict_rows, ForwardPass, MtlModel};
use crate::rng::named_stream;

/// Number of samples pushed through the model at once during evaluation.
const EVAL_CHUNK: usize = 256;

pub const HISTORY_HEADER: &str = "epoch,loss_t,loss_e,total,val_accuracy,val_f1";

/// Outcome of feeding one validation total to [`EarlyStopping`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopDecision {
    /// The epoch improved on the best total seen so far and becomes the restore point.
    pub improved: bool,
    /// Training should halt after this epoch.
    pub stop: bool,
}

/// Tracks the best validation total and the patience counter.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    config: EarlyStoppingConfig,
    best: f64,
    best_epoch: Option<usize>,
    waited: usize,
}

impl EarlyStopping {
    pub fn new(config: EarlyStoppingConfig) -> Self {
        Self { config, best: f64::INFINITY, best_epoch: None, waited: 0 }
    }

    pub fn observe(&mut self, epoch: usize, val_total: f64) -> StopDecision {
        let improved = val_total < self.best - self.config.min_delta;
        if improved {
            self.best = val_total;
            self.best_epoch = Some(epoch);
            self.waited = 0;
        } else {
            self.waited += 1;
        }
        let stop = self.config.enabled && self.waited >= self.config.patience;
        StopDecision { improved, stop }
    }

    pub fn best_epoch(&self) -> Option<usize> {
        self.best_epoch
    }

    pub fn best_total(&self) -> f64 {
        self.best
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Sample-weighted mean training losses over the epoch.
    pub train: LossBreakdown,
    pub validation: Option<LossBreakdown>,
    pub val_accuracy: Option<f64>,
    pub val_f1: Option<f64>,
}

impl EpochRecord {
    fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|v| format!("{v:.6}")).unwrap_or_default();
        format!(
            "{},{:.6},{:.6},{:.6},{},{}",
            self.epoch,
            self.train.loss_t,
            self.train.loss_e,
            self.train.total,
            opt(self.val_accuracy),
            opt(self.val_f1)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub history: Vec<EpochRecord>,
    /// Epoch whose parameters the model holds after `fit` returns.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl FitResult {
    pub fn history_csv(&self) -> String {
        let mut out = String::from(HISTORY_HEADER);
        out.push('\n');
        for r in &self.history {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        out
    }

    pub fn write_history(&self, path: &Path) -> Result<(), TrainError> {
        let io = |source| TrainError::Io { path: path.to_path_buf(), source };
        let mut f = std::fs::File::create(path).map_err(io)?;
        f.write_all(self.history_csv().as_bytes()).map_err(io)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub loss: LossBreakdown,
    pub metrics: MetricsReport,
    pub predictions: Vec<usize>,
    /// Accuracy of the auxiliary head, for multi-task models.
    pub aux_accuracy: Option<f64>,
}

fn aux_targets(model: &MtlModel, samples: &[EncodedSample]) -> Result<Option<Vec<usize>>, TrainError> {
    if !model.is_multi_task() {
        return Ok(None);
    }
    let targets =
        samples.iter().map(|s| model.aux_target(s).map(|t| t.unwrap_or_default())).collect::<Result<Vec<_>, _>>()?;
    Ok(Some(targets))
}

/// Records the branch losses on the pass's tape; returns the total node and its breakdown.
fn record_loss(
    pass: &mut ForwardPass,
    labels: &[usize],
    aux: Option<&[usize]>,
    weights: &LossWeights,
) -> Result<(Var, LossBreakdown), TrainError> {
    let tape = &mut pass.tape;
    let loss_t = tape.cross_entropy(pass.y_t, labels)?;
    let lt = tape.value(loss_t).data()[0];
    match (pass.y_e, aux) {
        (Some(y_e), Some(targets)) => {
            let loss_e = tape.cross_entropy(y_e, targets)?;
            let le = tape.value(loss_e).data()[0];
            let weighted_e = tape.scale(loss_e, weights.alpha())?;
            let weighted_t = tape.scale(loss_t, weights.beta())?;
            let total = tape.add(weighted_e, weighted_t)?;
            Ok((total, combined_loss(le, lt, weights)?))
        }
        _ => {
            if !lt.is_finite() {
                return Err(TrainError::NonFiniteLoss { loss_e: 0.0, loss_t: lt });
            }
            Ok((loss_t, LossBreakdown { loss_t: lt, loss_e: 0.0, total: lt }))
        }
    }
}

/// Gradients of the weighted total loss on one batch, keyed by parameter name.
/// Parameters the loss does not reach (e.g. a head weighted by zero) get exact zeros.
pub fn batch_gradients(
    model: &MtlModel,
    batch: &[EncodedSample],
    weights: &LossWeights,
) -> Result<(BTreeMap<String, Tensor>, LossBreakdown), TrainError> {
    let labels: Vec<usize> = batch.iter().map(|s| s.label as usize).collect();
    let aux = aux_targets(model, batch)?;
    let mut pass = model.forward(batch)?;
    let (total, breakdown) = record_loss(&mut pass, &labels, aux.as_deref(), weights)?;
    Ok((pass.tape.backward(total)?.params(), breakdown))
}

fn accumulate(acc: &mut LossBreakdown, b: &LossBreakdown, n: usize) {
    let n = n as f64;
    acc.loss_t += b.loss_t * n;
    acc.loss_e += b.loss_e * n;
    acc.total += b.total * n;
}

fn mean(acc: LossBreakdown, n: usize) -> LossBreakdown {
    let n = n.max(1) as f64;
    LossBreakdown { loss_t: acc.loss_t / n, loss_e: acc.loss_e / n, total: acc.total / n }
}

/// Losses, veracity metrics and predictions of `model` on `samples`.
pub fn evaluate_model(
    model: &MtlModel,
    samples: &[EncodedSample],
    weights: &LossWeights,
) -> Result<EvalResult, TrainError> {
    let aux = aux_targets(model, samples)?;
    let mut acc = LossBreakdown::default();
    let mut predictions = Vec::with_capacity(samples.len());
    let mut aux_predictions = Vec::new();
    for (c, part) in samples.chunks(EVAL_CHUNK).enumerate() {
        let labels: Vec<usize> = part.iter().map(|s| s.label as usize).collect();
        let aux_part = aux.as_ref().map(|a| &a[c * EVAL_CHUNK..c * EVAL_CHUNK + part.len()]);
        let mut pass = model.forward(part)?;
        let (_, b) = record_loss(&mut pass, &labels, aux_part, weights)?;
        accumulate(&mut acc, &b, part.len());
        predictions.extend(predict_rows(pass.tape.value(pass.y_t)));
        if let Some(y_e) = pass.y_e {
            aux_predictions.extend(predict_rows(pass.tape.value(y_e)));
        }
    }
    let labels: Vec<usize> = samples.iter().map(|s| s.label as usize).collect();
    let metrics = evaluate(&predictions, &labels)?;
    let aux_accuracy = match &aux {
        Some(targets) => Some(multiclass_accuracy(&aux_predictions, targets)?),
        None => None,
    };
    Ok(EvalResult { loss: mean(acc, samples.len()), metrics, predictions, aux_accuracy })
}

/// Trains `model` with Adam on mini-batches of `train`.
///
/// After every epoch the model is scored on `validation`; when training ends
/// the parameters of the epoch with the lowest validation total are
/// restored. With an empty validation set the final epoch is kept.
pub fn fit(
    model: &mut MtlModel,
    train: &[EncodedSample],
    validation: &[EncodedSample],
    config: &TrainConfig,
) -> Result<FitResult, TrainError> {
    config.validate()?;
    if train.is_empty() {
        return Err(TrainError::Config("training set is empty".into()));
    }
    // Surface missing auxiliary tags before any parameter is touched.
    aux_targets(model, train)?;
    aux_targets(model, validation)?;
    if validation.is_empty() {
        log::warn!("no validation samples; keeping the parameters of the final epoch");
    }

    let weights = config.weights;
    let mut adam = AdamState::new(AdamConfig::with_lr(config.lr));
    let mut stopper = EarlyStopping::new(config.early_stopping);
    let mut best_params = None;
    let mut history = Vec::with_capacity(config.epochs);
    let mut stopped_early = false;
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 1..=config.epochs {
        order.sort_unstable();
        order.shuffle(&mut named_stream(config.seed, &format!("shuffle/epoch{epoch}")));
        let mut acc = LossBreakdown::default();
        for idx in order.chunks(config.batch_size) {
            let batch: Vec<EncodedSample> = idx.iter().map(|&i| train[i].clone()).collect();
            let (grads, b) = batch_gradients(model, &batch, &weights)?;
            adam_step(&mut model.params, &grads, &mut adam)?;
            accumulate(&mut acc, &b, batch.len());
        }
        let train_loss = mean(acc, train.len());

        let mut record = EpochRecord { epoch, train: train_loss, validation: None, val_accuracy: None, val_f1: None };
        if !validation.is_empty() {
            let eval = evaluate_model(model, validation, &weights)?;
            record.validation = Some(eval.loss);
            record.val_accuracy = Some(eval.metrics.accuracy);
            record.val_f1 = Some(eval.metrics.f1);
            let decision = stopper.observe(epoch, eval.loss.total);
            if decision.improved {
                best_params = Some(model.params.clone());
            }
            stopped_early = decision.stop && epoch < config.epochs;
        }
        log::info!(
            "epoch {epoch}: loss_t {:.4} loss_e {:.4} total {:.4}{}",
            train_loss.loss_t,
            train_loss.loss_e,
            train_loss.total,
            record.val_accuracy.map(|a| format!(" val_acc {a:.4}")).unwrap_or_default()
        );
        history.push(record);
        if stopped_early {
            break;
        }
    }

    let best_epoch = match (best_params, stopper.best_epoch()) {
        (Some(params), Some(epoch)) => {
            model.params = params;
            epoch
        }
        _ => history.len(),
    };
    Ok(FitResult { history, best_epoch, stopped_early })
}
