//! Shared-encoder classifiers: a veracity head producing two logits and an
//! optional auxiliary head (emotion scheme or news domain) over the same
//! representation.

mod checkpoint;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::EncodedSample;
use crate::emotion::EmotionScheme;
use crate::engine::{EngineError, ParamStore, Tape, Tensor, Var};

pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT};

pub const DEFAULT_EMBEDDING_DIM: usize = 64;
pub const DEFAULT_CNN_FILTERS: usize = 32;
pub const DEFAULT_CNN_WIDTH: usize = 5;
pub const DEFAULT_LSTM_UNITS: usize = 100;
/// Pool width between the convolution and the LSTM in the CNN-LSTM encoder.
pub const CNN_LSTM_POOL: usize = 2;
pub const VERACITY_CLASSES: usize = 2;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("sample `{id}`: {message}")]
    Sample { id: String, message: String },
    #[error("{path}: {message}")]
    Checkpoint { path: std::path::PathBuf, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderKind {
    /// Embedding average. A fast baseline, not one of the evaluated encoders.
    MeanPool,
    Cnn,
    Lstm,
    CnnLstm,
}

impl EncoderKind {
    pub fn has_cnn(self) -> bool {
        matches!(self, EncoderKind::Cnn | EncoderKind::CnnLstm)
    }

    pub fn has_lstm(self) -> bool {
        matches!(self, EncoderKind::Lstm | EncoderKind::CnnLstm)
    }

    pub fn name(self) -> &'static str {
        match self {
            EncoderKind::MeanPool => "mean_pool",
            EncoderKind::Cnn => "cnn",
            EncoderKind::Lstm => "lstm",
            EncoderKind::CnnLstm => "cnn_lstm",
        }
    }

    /// Display label used in results tables.
    pub fn label(self) -> &'static str {
        match self {
            EncoderKind::MeanPool => "MeanPool",
            EncoderKind::Cnn => "CNN",
            EncoderKind::Lstm => "LSTM",
            EncoderKind::CnnLstm => "CNN-LSTM",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub kind: EncoderKind,
    pub embedding_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cnn_filters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cnn_width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lstm_units: Option<usize>,
    pub max_len: usize,
}

impl EncoderConfig {
    /// Config with the default layer sizes for `kind` filled in.
    pub fn new(kind: EncoderKind, embedding_dim: usize, max_len: usize) -> Self {
        Self { kind, embedding_dim, cnn_filters: None, cnn_width: None, lstm_units: None, max_len }.with_defaults()
    }

    /// Fills unset layer sizes relevant to the kind with their defaults.
    pub fn with_defaults(mut self) -> Self {
        if self.kind.has_cnn() {
            self.cnn_filters.get_or_insert(DEFAULT_CNN_FILTERS);
            self.cnn_width.get_or_insert(DEFAULT_CNN_WIDTH);
        }
        if self.kind.has_lstm() {
            self.lstm_units.get_or_insert(DEFAULT_LSTM_UNITS);
        }
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let err = |m: String| Err(ModelError::Config(m));
        if self.embedding_dim == 0 || self.max_len == 0 {
            return err("embedding_dim and max_len must be positive".into());
        }
        let cnn_set = self.cnn_filters.is_some() || self.cnn_width.is_some();
        if self.kind.has_cnn() {
            match (self.cnn_filters, self.cnn_width) {
                (Some(f), Some(w)) if f > 0 && w > 0 => {
                    if w > self.max_len {
                        return err(format!("cnn_width {w} exceeds max_len {}", self.max_len));
                    }
                    if self.kind == EncoderKind::CnnLstm && self.max_len - w + 1 < CNN_LSTM_POOL {
                        return err(format!("max_len {} too short for cnn_width {w} plus pooling", self.max_len));
                    }
                }
                _ => return err(format!("{} encoder needs positive cnn_filters and cnn_width", self.kind.name())),
            }
        } else if cnn_set {
            return err(format!("cnn fields given for {} encoder", self.kind.name()));
        }
        match (self.kind.has_lstm(), self.lstm_units) {
            (true, Some(u)) if u > 0 => {}
            (true, _) => return err(format!("{} encoder needs positive lstm_units", self.kind.name())),
            (false, Some(_)) => return err(format!("lstm_units given for {} encoder", self.kind.name())),
            (false, None) => {}
        }
        Ok(())
    }

    /// Width of the shared representation.
    pub fn representation_dim(&self) -> usize {
        match self.kind {
            EncoderKind::MeanPool => self.embedding_dim,
            EncoderKind::Cnn => self.cnn_filters.unwrap_or(DEFAULT_CNN_FILTERS),
            EncoderKind::Lstm | EncoderKind::CnnLstm => self.lstm_units.unwrap_or(DEFAULT_LSTM_UNITS),
        }
    }
}

/// What the auxiliary head predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuxTask {
    None,
    EmotionEkman,
    EmotionPlutchik,
    Domain,
}

impl AuxTask {
    /// Setting label used in results tables.
    pub fn setting(self) -> &'static str {
        match self {
            AuxTask::None => "STL",
            AuxTask::EmotionEkman => "MTL(Ekman)",
            AuxTask::EmotionPlutchik => "MTL(Plutchik)",
            AuxTask::Domain => "MTL(Domain)",
        }
    }

    pub fn scheme(self) -> Option<EmotionScheme> {
        match self {
            AuxTask::EmotionEkman => Some(EmotionScheme::Ekman6),
            AuxTask::EmotionPlutchik => Some(EmotionScheme::Plutchik8),
            _ => None,
        }
    }
}

/// Pre-softmax outputs of both branches for a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchLogits {
    /// `[batch, 2]` veracity logits.
    pub z_t: Tensor,
    /// `[batch, n]` auxiliary logits; absent for single-task models.
    pub z_e: Option<Tensor>,
}

/// Softmax of each branch's logits.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbDist {
    pub y_t_hat: Tensor,
    pub y_e_hat: Option<Tensor>,
}

/// A recorded forward pass. The tape stays alive for backpropagation.
#[derive(Debug)]
pub struct ForwardPass {
    pub tape: Tape,
    pub representation: Var,
    pub z_t: Var,
    pub y_t: Var,
    pub z_e: Option<Var>,
    pub y_e: Option<Var>,
}

impl ForwardPass {
    pub fn logits(&self) -> BranchLogits {
        BranchLogits { z_t: self.tape.value(self.z_t).clone(), z_e: self.z_e.map(|v| self.tape.value(v).clone()) }
    }

    pub fn probs(&self) -> ProbDist {
        ProbDist { y_t_hat: self.tape.value(self.y_t).clone(), y_e_hat: self.y_e.map(|v| self.tape.value(v).clone()) }
    }
}

/// Shared encoder with a veracity head and an optional auxiliary head.
#[derive(Debug, Clone, PartialEq)]
pub struct MtlModel {
    pub encoder: EncoderConfig,
    pub vocab_size: usize,
    pub auxiliary: AuxTask,
    pub n_aux: usize,
    /// Domain names indexed by auxiliary class (domain task only).
    pub domain_classes: Vec<String>,
    pub seed: u64,
    pub params: ParamStore,
}

const EMBEDDING: &str = "embedding";
const CONV_W: &str = "conv.weight";
const CONV_B: &str = "conv.bias";
const LSTM_WX: &str = "lstm.w_x";
const LSTM_WH: &str = "lstm.w_h";
const LSTM_B: &str = "lstm.bias";
const TASK_W: &str = "task_head.weight";
const TASK_B: &str = "task_head.bias";
pub const AUX_W: &str = "aux_head.weight";
pub const AUX_B: &str = "aux_head.bias";

/// Builds a model with every parameter drawn from its own named stream, so
/// a single-task and a multi-task model built from the same seed share the
/// encoder and veracity-head initialization exactly.
pub fn build_model(
    encoder: &EncoderConfig,
    vocab_size: usize,
    auxiliary: AuxTask,
    n_aux: Option<usize>,
    seed: u64,
) -> Result<MtlModel, ModelError> {
    let encoder = encoder.clone();
    encoder.validate()?;
    if vocab_size < 2 {
        return Err(ModelError::Config(format!("vocabulary size {vocab_size} is below the two reserved slots")));
    }
    let n_aux = match (auxiliary, n_aux) {
        (AuxTask::None, None | Some(0)) => 0,
        (AuxTask::None, Some(n)) => return Err(ModelError::Config(format!("single-task model given n_aux = {n}"))),
        (AuxTask::EmotionEkman | AuxTask::EmotionPlutchik, n) => {
            let expected = auxiliary.scheme().expect("emotion task").n();
            match n {
                None => expected,
                Some(n) if n == expected => n,
                Some(n) => {
                    return Err(ModelError::Config(format!(
                        "{} needs n_aux = {expected}, got {n}",
                        auxiliary.setting()
                    )))
                }
            }
        }
        (AuxTask::Domain, Some(n)) if n >= 2 => n,
        (AuxTask::Domain, n) => {
            return Err(ModelError::Config(format!("domain task needs at least 2 domains, got {n:?}")))
        }
    };

    let mut params = ParamStore::new();
    let (vocab, dim) = (vocab_size, encoder.embedding_dim);
    params.init_uniform(EMBEDDING, &[vocab, dim], seed);
    let mut seq_dim = dim;
    if encoder.kind.has_cnn() {
        let (f, w) = (encoder.cnn_filters.expect("validated"), encoder.cnn_width.expect("validated"));
        params.init_uniform(CONV_W, &[f, w, dim], seed);
        params.init_uniform(CONV_B, &[f], seed);
        seq_dim = f;
    }
    if encoder.kind.has_lstm() {
        let u = encoder.lstm_units.expect("validated");
        params.init_uniform(LSTM_WX, &[seq_dim, 4 * u], seed);
        params.init_uniform(LSTM_WH, &[u, 4 * u], seed);
        params.init_uniform(LSTM_B, &[4 * u], seed);
    }
    let rep = encoder.representation_dim();
    params.init_uniform(TASK_W, &[rep, VERACITY_CLASSES], seed);
    params.init_uniform(TASK_B, &[VERACITY_CLASSES], seed);
    if auxiliary != AuxTask::None {
        params.init_uniform(AUX_W, &[rep, n_aux], seed);
        params.init_uniform(AUX_B, &[n_aux], seed);
    }
    Ok(MtlModel { encoder, vocab_size, auxiliary, n_aux, domain_classes: Vec::new(), seed, params })
}

struct ParamVars {
    embedding: Var,
    conv: Option<(Var, Var)>,
    lstm: Option<(Var, Var, Var)>,
    task: (Var, Var),
    aux: Option<(Var, Var)>,
}

impl MtlModel {
    pub fn is_multi_task(&self) -> bool {
        self.auxiliary != AuxTask::None
    }

    /// Sets the domain vocabulary for a domain-auxiliary model.
    pub fn with_domain_classes(mut self, classes: Vec<String>) -> Result<Self, ModelError> {
        if self.auxiliary != AuxTask::Domain || classes.len() != self.n_aux {
            return Err(ModelError::Config(format!(
                "{} domain classes for {} with n_aux {}",
                classes.len(),
                self.auxiliary.setting(),
                self.n_aux
            )));
        }
        self.domain_classes = classes;
        Ok(self)
    }

    /// Auxiliary class index for a sample, or `None` for single-task models.
    pub fn aux_target(&self, sample: &EncodedSample) -> Result<Option<usize>, ModelError> {
        let missing = |what: &str| ModelError::Sample { id: sample.id.clone(), message: format!("missing {what} tag") };
        match self.auxiliary {
            AuxTask::None => Ok(None),
            AuxTask::EmotionEkman => sample.emotion_ekman.map(Some).ok_or_else(|| missing("emotion_ekman")),
            AuxTask::EmotionPlutchik => sample.emotion_plutchik.map(Some).ok_or_else(|| missing("emotion_plutchik")),
            AuxTask::Domain => {
                let d = sample.domain.as_deref().ok_or_else(|| missing("domain"))?;
                self.domain_classes.iter().position(|c| c == d).map(Some).ok_or_else(|| ModelError::Sample {
                    id: sample.id.clone(),
                    message: format!("domain `{d}` not among the model's domains {:?}", self.domain_classes),
                })
            }
        }
    }

    fn record_params(&self, tape: &mut Tape) -> Result<ParamVars, ModelError> {
        let mut p = |name: &str| -> Result<Var, ModelError> { Ok(tape.param(name, self.params.get(name)?)?) };
        let embedding = p(EMBEDDING)?;
        let conv = if self.encoder.kind.has_cnn() { Some((p(CONV_W)?, p(CONV_B)?)) } else { None };
        let lstm = if self.encoder.kind.has_lstm() { Some((p(LSTM_WX)?, p(LSTM_WH)?, p(LSTM_B)?)) } else { None };
        let task = (p(TASK_W)?, p(TASK_B)?);
        let aux = if self.is_multi_task() { Some((p(AUX_W)?, p(AUX_B)?)) } else { None };
        Ok(ParamVars { embedding, conv, lstm, task, aux })
    }

    fn encode_one(&self, tape: &mut Tape, vars: &ParamVars, sample: &EncodedSample) -> Result<Var, ModelError> {
        if sample.token_ids.len() != self.encoder.max_len || sample.true_length > self.encoder.max_len {
            return Err(ModelError::Sample {
                id: sample.id.clone(),
                message: format!(
                    "encoded length {} (true {}) does not match max_len {}",
                    sample.token_ids.len(),
                    sample.true_length,
                    self.encoder.max_len
                ),
            });
        }
        let emb = tape.embedding_lookup(vars.embedding, &sample.token_ids)?;
        let rep = match self.encoder.kind {
            EncoderKind::MeanPool => tape.mean_pool(emb, sample.true_length)?,
            EncoderKind::Cnn => {
                let (w, b) = vars.conv.expect("cnn params");
                let conv = tape.conv1d(emb, w, b)?;
                let act = tape.relu(conv)?;
                let len = tape.value(act).shape()[0];
                tape.max_pool1d(act, len)?
            }
            EncoderKind::Lstm => {
                let (wx, wh, b) = vars.lstm.expect("lstm params");
                tape.lstm_sequence(emb, wx, wh, b, sample.true_length)?
            }
            EncoderKind::CnnLstm => {
                let (w, b) = vars.conv.expect("cnn params");
                let conv = tape.conv1d(emb, w, b)?;
                let act = tape.relu(conv)?;
                let conv_len = tape.value(act).shape()[0];
                let pooled = tape.max_pool1d(act, CNN_LSTM_POOL)?;
                let pooled_len = tape.value(pooled).shape()[0];
                // pooled steps whose window touches at least one real token
                let real = sample.true_length.min(conv_len).div_ceil(CNN_LSTM_POOL).min(pooled_len);
                let (wx, wh, lb) = vars.lstm.expect("lstm params");
                tape.lstm_sequence(pooled, wx, wh, lb, real)?
            }
        };
        Ok(rep)
    }

    /// Records the forward pass for `batch` onto a fresh tape.
    pub fn forward(&self, batch: &[EncodedSample]) -> Result<ForwardPass, ModelError> {
        if batch.is_empty() {
            return Err(ModelError::Config("empty batch".into()));
        }
        let mut tape = Tape::new();
        let vars = self.record_params(&mut tape)?;
        let reps = batch.iter().map(|s| self.encode_one(&mut tape, &vars, s)).collect::<Result<Vec<_>, _>>()?;
        let representation = tape.stack(&reps)?;
        let z_t = tape.dense(representation, vars.task.0, vars.task.1)?;
        let y_t = tape.softmax(z_t)?;
        let (z_e, y_e) = match vars.aux {
            Some((w, b)) => {
                let z = tape.dense(representation, w, b)?;
                let y = tape.softmax(z)?;
                (Some(z), Some(y))
            }
            None => (None, None),
        };
        Ok(ForwardPass { tape, representation, z_t, y_t, z_e, y_e })
    }

    /// Veracity predictions for `samples`, evaluated in chunks.
    pub fn predict_batch(&self, samples: &[EncodedSample], chunk: usize) -> Result<Vec<usize>, ModelError> {
        let mut out = Vec::with_capacity(samples.len());
        for part in samples.chunks(chunk.max(1)) {
            let pass = self.forward(part)?;
            out.extend(predict_rows(pass.tape.value(pass.y_t)));
        }
        Ok(out)
    }

    /// Shared-encoder representations, one row per sample.
    pub fn representations(&self, samples: &[EncodedSample], chunk: usize) -> Result<Vec<Vec<f64>>, ModelError> {
        let mut out = Vec::with_capacity(samples.len());
        for part in samples.chunks(chunk.max(1)) {
            let pass = self.forward(part)?;
            let reps = pass.tape.value(pass.representation);
            out.extend((0..part.len()).map(|r| reps.row(r).to_vec()));
        }
        Ok(out)
    }
}

/// Argmax with ties broken toward the lowest index.
pub fn predict(dist: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in dist.iter().enumerate().skip(1) {
        if v > dist[best] {
            best = i;
        }
    }
    best
}

/// [`predict`] applied to each row of a `[batch, classes]` tensor.
pub fn predict_rows(t: &Tensor) -> Vec<usize> {
    let (rows, _) = t.as_rows();
    (0..rows).map(|r| predict(t.row(r))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(id: &str, ids: &[usize], max_len: usize) -> EncodedSample {
        let mut token_ids = ids.to_vec();
        token_ids.resize(max_len, 0);
        EncodedSample {
            id: id.into(),
            token_ids,
            true_length: ids.len(),
            label: 0,
            emotion_ekman: Some(1),
            emotion_plutchik: Some(2),
            domain: None,
        }
    }

    fn small(kind: EncoderKind) -> EncoderConfig {
        let mut c = EncoderConfig::new(kind, 6, 12);
        if kind.has_cnn() {
            c.cnn_filters = Some(4);
            c.cnn_width = Some(3);
        }
        if kind.has_lstm() {
            c.lstm_units = Some(5);
        }
        c
    }

    #[test]
    fn auxiliary_head_sizes() {
        let m = build_model(&small(EncoderKind::Lstm), 20, AuxTask::EmotionEkman, Some(6), 7).unwrap();
        let pass = m.forward(&[sample("a", &[2, 3], 12)]).unwrap();
        assert_eq!(pass.logits().z_e.unwrap().shape(), [1, 6]);
        let m = build_model(&small(EncoderKind::Lstm), 20, AuxTask::EmotionPlutchik, Some(8), 7).unwrap();
        assert_eq!(m.forward(&[sample("a", &[2], 12)]).unwrap().logits().z_e.unwrap().shape(), [1, 8]);
        let m = build_model(&small(EncoderKind::Cnn), 20, AuxTask::None, None, 7).unwrap();
        let pass = m.forward(&[sample("a", &[2], 12)]).unwrap();
        assert!(pass.logits().z_e.is_none());
        assert_eq!(pass.logits().z_t.shape(), [1, 2]);
    }

    #[test]
    fn inconsistent_aux_rejected() {
        let c = small(EncoderKind::MeanPool);
        assert!(build_model(&c, 20, AuxTask::EmotionEkman, Some(8), 1).is_err());
        assert!(build_model(&c, 20, AuxTask::None, Some(6), 1).is_err());
        assert!(build_model(&c, 20, AuxTask::Domain, Some(1), 1).is_err());
        assert!(build_model(&c, 20, AuxTask::Domain, Some(3), 1).is_ok());
    }

    #[test]
    fn encoder_field_rules() {
        let mut c = EncoderConfig::new(EncoderKind::Cnn, 8, 10);
        assert_eq!((c.cnn_filters, c.cnn_width, c.lstm_units), (Some(32), Some(5), None));
        c.lstm_units = Some(3);
        assert!(c.validate().is_err());
        let mut c = EncoderConfig::new(EncoderKind::Lstm, 8, 10);
        c.lstm_units = None;
        assert!(c.validate().is_err());
        let c = EncoderConfig::new(EncoderKind::Cnn, 8, 4);
        assert!(c.validate().is_err(), "width 5 exceeds max_len 4");
        assert_eq!(EncoderConfig::new(EncoderKind::CnnLstm, 8, 64).representation_dim(), 100);
    }

    #[test]
    fn stl_and_mtl_share_initialization() {
        for kind in [EncoderKind::MeanPool, EncoderKind::Cnn, EncoderKind::Lstm, EncoderKind::CnnLstm] {
            let stl = build_model(&small(kind), 30, AuxTask::None, None, 11).unwrap();
            let mtl = build_model(&small(kind), 30, AuxTask::EmotionEkman, Some(6), 11).unwrap();
            for (name, t) in stl.params.iter() {
                assert_eq!(t, mtl.params.get(name).unwrap(), "{name}");
            }
            assert!(mtl.params.contains(AUX_W) && !stl.params.contains(AUX_W));
        }
    }

    #[test]
    fn probabilities_sum_to_one_and_duplicates_match() {
        for kind in [EncoderKind::MeanPool, EncoderKind::Cnn, EncoderKind::Lstm, EncoderKind::CnnLstm] {
            let m = build_model(&small(kind), 30, AuxTask::EmotionPlutchik, None, 3).unwrap();
            let batch =
                [sample("a", &[4, 5, 6], 12), sample("b", &[9], 12), sample("c", &[4, 5, 6], 12), sample("d", &[], 12)];
            let probs = m.forward(&batch).unwrap().probs();
            for r in 0..4 {
                assert!((probs.y_t_hat.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-9);
                assert!((probs.y_e_hat.as_ref().unwrap().row(r).iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
            assert_eq!(probs.y_t_hat.row(0), probs.y_t_hat.row(2));
        }
    }

    #[test]
    fn zero_heads_give_uniform() {
        let mut m = build_model(&small(EncoderKind::Lstm), 30, AuxTask::EmotionEkman, None, 3).unwrap();
        for name in [TASK_W, TASK_B, AUX_W, AUX_B] {
            m.params.get_mut(name).unwrap().data_mut().iter_mut().for_each(|v| *v = 0.0);
        }
        let probs = m.forward(&[sample("a", &[3, 4], 12)]).unwrap().probs();
        assert_eq!(probs.y_t_hat.data(), [0.5, 0.5]);
        for v in probs.y_e_hat.unwrap().data() {
            assert!((v - 1.0 / 6.0).abs() < 1e-15);
        }
    }

    #[test]
    fn forward_is_pure() {
        let m = build_model(&small(EncoderKind::CnnLstm), 30, AuxTask::None, None, 5).unwrap();
        let batch = [sample("a", &[4, 5, 6, 7], 12)];
        assert_eq!(m.forward(&batch).unwrap().logits(), m.forward(&batch).unwrap().logits());
    }

    #[test]
    fn wrong_length_rejected() {
        let m = build_model(&small(EncoderKind::MeanPool), 30, AuxTask::None, None, 5).unwrap();
        assert!(matches!(m.forward(&[sample("a", &[1], 8)]), Err(ModelError::Sample { .. })));
        let mut bad = sample("b", &[1], 12);
        bad.token_ids[0] = 30;
        assert!(m.forward(&[bad]).is_err());
    }

    #[test]
    fn predict_ties_low() {
        assert_eq!(predict(&[0.2, 0.8]), 1);
        assert_eq!(predict(&[0.5, 0.5]), 0);
        assert_eq!(predict(&[0.1, 0.1, 0.5, 0.1, 0.1, 0.1]), 2);
    }

    #[test]
    fn argmax_logits_matches_argmax_probs() {
        let m = build_model(&small(EncoderKind::Cnn), 30, AuxTask::EmotionEkman, None, 9).unwrap();
        let batch: Vec<_> = (0..8).map(|i| sample(&format!("s{i}"), &[i + 2, 20 - i], 12)).collect();
        let pass = m.forward(&batch).unwrap();
        let (l, p) = (pass.logits(), pass.probs());
        assert_eq!(predict_rows(&l.z_t), predict_rows(&p.y_t_hat));
        assert_eq!(predict_rows(l.z_e.as_ref().unwrap()), predict_rows(p.y_e_hat.as_ref().unwrap()));
    }
}
