use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{EngineError, ParamStore, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self { lr, ..Self::default() }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 2e-5, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// First/second moment accumulators keyed by parameter name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    m: BTreeMap<String, Tensor>,
    v: BTreeMap<String, Tensor>,
}

impl AdamState {
    pub fn new(config: AdamConfig) -> Self {
        Self { config, step: 0, m: BTreeMap::new(), v: BTreeMap::new() }
    }
}

/// One bias-corrected Adam update. Parameters without an entry in `grads`
/// are treated as having zero gradient. Nothing is modified on error.
pub fn adam_step(
    params: &mut ParamStore,
    grads: &BTreeMap<String, Tensor>,
    state: &mut AdamState,
) -> Result<(), EngineError> {
    for (name, g) in grads {
        let p = params.get(name)?;
        if p.shape() != g.shape() {
            return Err(EngineError::Shape {
                op: "adam_step",
                detail: format!("parameter `{name}` {:?} vs gradient {:?}", p.shape(), g.shape()),
            });
        }
        if !g.is_finite() {
            return Err(EngineError::NonFiniteGradient(name.clone()));
        }
    }
    state.step += 1;
    let AdamConfig { lr, beta1, beta2, epsilon } = state.config;
    let t = state.step as i32;
    let bc1 = 1.0 - beta1.powi(t);
    let bc2 = 1.0 - beta2.powi(t);
    for (name, p) in params.iter_mut() {
        let m = state.m.entry(name.to_string()).or_insert_with(|| Tensor::zeros(p.shape()));
        let v = state.v.entry(name.to_string()).or_insert_with(|| Tensor::zeros(p.shape()));
        let g = grads.get(name).map(Tensor::data);
        for i in 0..p.len() {
            let gi = g.map_or(0.0, |g| g[i]);
            let mi = beta1 * m.data()[i] + (1.0 - beta1) * gi;
            let vi = beta2 * v.data()[i] + (1.0 - beta2) * gi * gi;
            m.data_mut()[i] = mi;
            v.data_mut()[i] = vi;
            let m_hat = mi / bc1;
            let v_hat = vi / bc2;
            p.data_mut()[i] -= lr * m_hat / (v_hat.sqrt() + epsilon);
        }
    }
    Ok(())
}
