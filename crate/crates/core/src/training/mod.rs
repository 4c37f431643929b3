//! Loss weighting between the veracity and auxiliary branches, the training
//! loop and the α sweep harness.

mod fit;
mod sweep;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::EngineError;
use crate::metrics::MetricsError;
use crate::models::ModelError;

pub use fit::{
    batch_gradients, evaluate_model, fit, EarlyStopping, EpochRecord, EvalResult, FitResult, StopDecision,
    HISTORY_HEADER,
};
pub use sweep::{sweep_alpha, sweep_csv, write_sweep_csv, SweepConfig, SweepPoint, SWEEP_HEADER};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("non-finite branch loss (loss_e = {loss_e}, loss_t = {loss_t})")]
    NonFiniteLoss { loss_e: f64, loss_t: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Weights of the auxiliary (α) and veracity (β = 1 − α) branch losses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct LossWeights {
    alpha: f64,
}

impl LossWeights {
    pub fn new(alpha: f64) -> Result<Self, TrainError> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(TrainError::Config(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        1.0 - self.alpha
    }
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { alpha: 0.5 }
    }
}

impl TryFrom<f64> for LossWeights {
    type Error = TrainError;

    fn try_from(alpha: f64) -> Result<Self, Self::Error> {
        Self::new(alpha)
    }
}

impl From<LossWeights> for f64 {
    fn from(w: LossWeights) -> f64 {
        w.alpha
    }
}

/// Per-branch losses and their weighted total.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub loss_t: f64,
    pub loss_e: f64,
    pub total: f64,
}

/// `total = α·loss_e + (1 − α)·loss_t`.
pub fn combined_loss(loss_e: f64, loss_t: f64, weights: &LossWeights) -> Result<LossBreakdown, TrainError> {
    if !loss_e.is_finite() || !loss_t.is_finite() {
        return Err(TrainError::NonFiniteLoss { loss_e, loss_t });
    }
    let total = weights.alpha() * loss_e + weights.beta() * loss_t;
    Ok(LossBreakdown { loss_t, loss_e, total })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EarlyStoppingConfig {
    pub enabled: bool,
    pub patience: usize,
    pub min_delta: f64,
}

impl Default for EarlyStoppingConfig {
    fn default() -> Self {
        Self { enabled: false, patience: 2, min_delta: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    #[serde(rename = "alpha")]
    pub weights: LossWeights,
    pub early_stopping: EarlyStoppingConfig,
    pub seed: u64,
}

pub const DEFAULT_EPOCHS: usize = 5;
pub const DEFAULT_BATCH_SIZE: usize = 64;
pub const DEFAULT_LR: f64 = 2e-5;

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: DEFAULT_EPOCHS,
            batch_size: DEFAULT_BATCH_SIZE,
            lr: DEFAULT_LR,
            weights: LossWeights::default(),
            early_stopping: EarlyStoppingConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(TrainError::Config("epochs and batch_size must be positive".into()));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(TrainError::Config(format!("learning rate must be positive, got {}", self.lr)));
        }
        let es = &self.early_stopping;
        if es.enabled && es.patience == 0 {
            return Err(TrainError::Config("early stopping patience must be at least 1".into()));
        }
        if !(es.min_delta.is_finite() && es.min_delta >= 0.0) {
            return Err(TrainError::Config("early stopping min_delta must be non-negative".into()));
        }
        Ok(())
    }
}
