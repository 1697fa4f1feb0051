//! Spatial-temporal transformer body with classifier and policy heads.

mod attention;
mod checkpoint;
mod model;

pub use attention::{
    gate_spatial_weights, gate_weights, positional_encoding, AttentionBlock, GatedOutput,
    TemporalOutput,
};
pub use checkpoint::{
    checkpoint_from_str, checkpoint_to_string, load_checkpoint, save_checkpoint, CHECKPOINT_FORMAT,
    CHECKPOINT_VERSION,
};
pub use model::{EarlyClassifier, ForwardNodes, ModelConfig, SpatialTemporalModel, StepOutputs};
