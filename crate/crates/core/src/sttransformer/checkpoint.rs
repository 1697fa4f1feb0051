//! JSON checkpoint container.
//!
//! ```text
//! {"format": "multimodal-early-checkpoint", "version": 1,
//!  "config": {...ModelConfig...},
//!  "params": [{"name": "block0.temporal.head0.query", "shape": [32, 8], "values": [...]}, ...]}
//! ```
//!
//! Floats are written with shortest round-trip formatting, so a saved and
//! reloaded model is bit-identical.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{ModelConfig, SpatialTemporalModel};
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "multimodal-early-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NamedTensor {
    name: String,
    shape: Vec<usize>,
    values: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Checkpoint {
    format: String,
    version: u32,
    config: ModelConfig,
    params: Vec<NamedTensor>,
}

pub fn checkpoint_to_string(model: &SpatialTemporalModel) -> String {
    let ckpt = Checkpoint {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        config: model.config().clone(),
        params: model
            .params()
            .iter()
            .map(|(_, p)| NamedTensor {
                name: p.name.clone(),
                shape: p.value.shape().to_vec(),
                values: p.value.values().to_vec(),
            })
            .collect(),
    };
    serde_json::to_string(&ckpt).expect("checkpoint serializes")
}

pub fn checkpoint_from_str(s: &str) -> Result<SpatialTemporalModel> {
    let ckpt: Checkpoint = serde_json::from_str(s)?;
    if ckpt.format != CHECKPOINT_FORMAT || ckpt.version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported container {} v{}",
            ckpt.format, ckpt.version
        )));
    }
    let mut model = SpatialTemporalModel::new(ckpt.config, 0)?;
    let store = model.params_mut();
    if store.len() != ckpt.params.len() {
        return Err(Error::Checkpoint(format!(
            "expected {} tensors, found {}",
            store.len(),
            ckpt.params.len()
        )));
    }
    for t in ckpt.params {
        let id = store
            .id(&t.name)
            .ok_or_else(|| Error::Checkpoint(format!("unexpected tensor `{}`", t.name)))?;
        let p = store.get_mut(id);
        if p.value.shape() != t.shape.as_slice() || t.values.len() != p.value.len() {
            return Err(Error::Checkpoint(format!(
                "`{}` has shape {:?}, model expects {:?}",
                t.name,
                t.shape,
                p.value.shape()
            )));
        }
        p.value.values_mut().copy_from_slice(&t.values);
    }
    Ok(model)
}

pub fn save_checkpoint(model: &SpatialTemporalModel, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, checkpoint_to_string(model))?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<SpatialTemporalModel> {
    checkpoint_from_str(&fs::read_to_string(path)?)
}
