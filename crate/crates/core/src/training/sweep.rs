use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate_model, fit, LossWeights, TrainConfig, TrainError};
use crate::corpus::EncodedSample;
use crate::metrics::MetricsReport;
use crate::models::{ModelError, MtlModel};

pub const SWEEP_HEADER: &str = "alpha,beta,accuracy,precision,recall,f1";

/// Grid of auxiliary weights `start, start + step, …, end` and the training
/// configuration shared by every grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    #[serde(rename = "start")]
    pub alpha_start: f64,
    #[serde(rename = "step")]
    pub alpha_step: f64,
    #[serde(rename = "end")]
    pub alpha_end: f64,
    #[serde(skip)]
    pub base: TrainConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { alpha_start: 0.20, alpha_step: 0.05, alpha_end: 0.80, base: TrainConfig::default() }
    }
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

impl SweepConfig {
    /// The α values of the grid, in increasing order. Values are rounded to
    /// twelve decimals so that `0.2 + 3 × 0.05` prints as `0.35`.
    pub fn grid(&self) -> Result<Vec<f64>, TrainError> {
        let (start, step, end) = (self.alpha_start, self.alpha_step, self.alpha_end);
        if !(start.is_finite() && step.is_finite() && end.is_finite()) || step <= 0.0 {
            return Err(TrainError::Config(format!("sweep step must be positive, got {step}")));
        }
        if !(0.0..=1.0).contains(&start) || !(0.0..=1.0).contains(&end) {
            return Err(TrainError::Config(format!("sweep bounds must lie in [0, 1], got {start}..{end}")));
        }
        if start > end {
            return Err(TrainError::Config(format!("empty sweep grid: start {start} exceeds end {end}")));
        }
        let count = ((end - start) / step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| round12(start + i as f64 * step).min(1.0)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub alpha: f64,
    pub beta: f64,
    pub best_epoch: usize,
    pub metrics: MetricsReport,
}

impl SweepPoint {
    fn csv_row(&self) -> String {
        let m = &self.metrics;
        format!("{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}", self.alpha, self.beta, m.accuracy, m.precision, m.recall, m.f1)
    }
}

/// Trains one model per grid point and scores each on `test`.
///
/// `factory` must return an identically initialised model on every call;
/// grid points run in parallel and the result is ordered by α.
pub fn sweep_alpha<F>(
    sweep: &SweepConfig,
    factory: F,
    train: &[EncodedSample],
    validation: &[EncodedSample],
    test: &[EncodedSample],
) -> Result<Vec<SweepPoint>, TrainError>
where
    F: Fn() -> Result<MtlModel, ModelError> + Sync,
{
    let grid = sweep.grid()?;
    sweep.base.validate()?;
    grid.par_iter()
        .map(|&alpha| {
            let weights = LossWeights::new(alpha)?;
            let config = TrainConfig { weights, ..sweep.base.clone() };
            let mut model = factory()?;
            let result = fit(&mut model, train, validation, &config)?;
            let eval = evaluate_model(&model, test, &weights)?;
            log::info!("alpha {alpha:.2}: accuracy {:.4} f1 {:.4}", eval.metrics.accuracy, eval.metrics.f1);
            Ok(SweepPoint { alpha, beta: weights.beta(), best_epoch: result.best_epoch, metrics: eval.metrics })
        })
        .collect()
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for p in points {
        out.push_str(&p.csv_row());
        out.push('\n');
    }
    out
}

pub fn write_sweep_csv(points: &[SweepPoint], path: &Path) -> Result<(), TrainError> {
    let io = |source| TrainError::Io { path: path.to_path_buf(), source };
    let mut f = std::fs::File::create(path).map_err(io)?;
    f.write_all(sweep_csv(points).as_bytes()).map_err(io)
}
