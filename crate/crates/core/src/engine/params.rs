use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{EngineError, Tensor};
use crate::rng::named_stream;

/// Half-width of the uniform initialization range.
pub const INIT_SCALE: f64 = 0.05;

/// Named model parameters, iterated in name order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamStore {
    params: BTreeMap<String, Tensor>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a parameter drawn from uniform(-0.05, 0.05) using the stream
    /// keyed by `(seed, name)`.
    pub fn init_uniform(&mut self, name: &str, shape: &[usize], seed: u64) {
        let mut rng = named_stream(seed, name);
        let n: usize = shape.iter().product();
        let data = (0..n).map(|_| rng.random_range(-INIT_SCALE..INIT_SCALE)).collect();
        self.params.insert(name.to_string(), Tensor::new(shape.to_vec(), data).expect("shape matches count"));
    }

    pub fn insert(&mut self, name: &str, value: Tensor) {
        self.params.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Result<&Tensor, EngineError> {
        self.params.get(name).ok_or_else(|| EngineError::UnknownParam(name.to_string()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor, EngineError> {
        self.params.get_mut(name).ok_or_else(|| EngineError::UnknownParam(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.params.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.params.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor)> {
        self.params.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.params.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn num_values(&self) -> usize {
        self.params.values().map(Tensor::len).sum()
    }
}
