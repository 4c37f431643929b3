use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{build_model, AuxTask, EncoderConfig, ModelError, MtlModel};
use crate::corpus::Vocabulary;
use crate::engine::ParamStore;

pub const CHECKPOINT_FORMAT: &str = "emomtl-checkpoint/1";

/// Serialized model: layer name → shape + values, plus everything needed
/// to rebuild and re-encode inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub engine_version: String,
    pub seed: u64,
    pub config_hash: String,
    pub encoder: EncoderConfig,
    pub vocab_size: usize,
    pub auxiliary: AuxTask,
    pub n_aux: usize,
    #[serde(default)]
    pub domain_classes: Vec<String>,
    pub vocabulary: Option<Vocabulary>,
    pub params: ParamStore,
}

impl Checkpoint {
    pub fn from_model(model: &MtlModel, vocabulary: Option<&Vocabulary>, config_hash: &str) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            engine_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: model.seed,
            config_hash: config_hash.to_string(),
            encoder: model.encoder.clone(),
            vocab_size: model.vocab_size,
            auxiliary: model.auxiliary,
            n_aux: model.n_aux,
            domain_classes: model.domain_classes.clone(),
            vocabulary: vocabulary.cloned(),
            params: model.params.clone(),
        }
    }

    /// Rebuilds the model, checking every stored tensor against the shape the
    /// configuration implies.
    pub fn into_model(self) -> Result<(MtlModel, Option<Vocabulary>), ModelError> {
        let bad = |message: String| ModelError::Config(format!("checkpoint: {message}"));
        if self.format != CHECKPOINT_FORMAT {
            return Err(bad(format!("unsupported format `{}`", self.format)));
        }
        let n_aux = (self.auxiliary != AuxTask::None).then_some(self.n_aux);
        let mut model = build_model(&self.encoder, self.vocab_size, self.auxiliary, n_aux, self.seed)?;
        if model.params.len() != self.params.len() {
            return Err(bad(format!("expected {} tensors, found {}", model.params.len(), self.params.len())));
        }
        for (name, stored) in self.params.iter() {
            let fresh = model.params.get_mut(name).map_err(|_| bad(format!("unexpected tensor `{name}`")))?;
            if fresh.shape() != stored.shape() {
                return Err(bad(format!(
                    "tensor `{name}` has shape {:?}, expected {:?}",
                    stored.shape(),
                    fresh.shape()
                )));
            }
            *fresh = stored.clone();
        }
        model.domain_classes = self.domain_classes;
        Ok((model, self.vocabulary.map(Vocabulary::reindex)))
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        let json = serde_json::to_vec(self)
            .map_err(|e| ModelError::Checkpoint { path: path.into(), message: e.to_string() })?;
        std::fs::write(path, json).map_err(|e| ModelError::Checkpoint { path: path.into(), message: e.to_string() })
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let bytes =
            std::fs::read(path).map_err(|e| ModelError::Checkpoint { path: path.into(), message: e.to_string() })?;
        serde_json::from_slice(&bytes).map_err(|e| ModelError::Checkpoint { path: path.into(), message: e.to_string() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::EncoderKind;

    #[test]
    fn save_load_round_trip() {
        let mut enc = EncoderConfig::new(EncoderKind::Cnn, 4, 8);
        enc.cnn_filters = Some(3);
        enc.cnn_width = Some(2);
        let model = build_model(&enc, 12, AuxTask::Domain, Some(2), 5)
            .unwrap()
            .with_domain_classes(vec!["a".into(), "b".into()])
            .unwrap();
        let ck = Checkpoint::from_model(&model, None, "abc");
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("checkpoint.json");
        ck.save(&path).unwrap();
        let loaded = Checkpoint::load(&path).unwrap();
        assert_eq!(loaded, ck);
        let (back, vocab) = loaded.into_model().unwrap();
        assert_eq!(back, model);
        assert!(vocab.is_none());
    }

    #[test]
    fn shape_mismatch_rejected() {
        let enc = EncoderConfig::new(EncoderKind::MeanPool, 4, 8);
        let model = build_model(&enc, 12, AuxTask::None, None, 5).unwrap();
        let mut ck = Checkpoint::from_model(&model, None, "x");
        ck.vocab_size = 13;
        assert!(ck.into_model().is_err());
    }
}
