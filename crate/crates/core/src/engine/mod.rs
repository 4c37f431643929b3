//! A small deterministic tensor engine: tape-recorded forward operators,
//! reverse-mode gradients, Adam and finite-difference gradient checking.

mod adam;
mod gradcheck;
mod params;
mod tape;
mod tensor;

use thiserror::Error;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gradcheck::{grad_check, DEFAULT_EPS};
pub use params::{ParamStore, INIT_SCALE};
pub use tape::{softmax_rows, Gradients, Tape, Var, PROB_FLOOR};
pub use tensor::Tensor;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("{op}: shape mismatch: {detail}")]
    Shape { op: &'static str, detail: String },
    #[error("{op}: non-finite value")]
    NonFinite { op: &'static str },
    #[error("non-finite gradient for parameter `{0}`")]
    NonFiniteGradient(String),
    #[error("loss must be a scalar, got shape {shape:?}")]
    NonScalarLoss { shape: Vec<usize> },
    #[error("target {target} out of range for {classes} classes")]
    TargetOutOfRange { target: usize, classes: usize },
    #[error("parameter `{0}` recorded twice on one tape")]
    DuplicateParam(String),
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
}
