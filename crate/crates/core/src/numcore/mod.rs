//! Dense tensors and reverse-mode automatic differentiation.

mod gradcheck;
mod graph;
pub mod nn;
pub mod ops;
mod params;
mod tensor;

pub use gradcheck::{grad_check, relative_error, GradCheckOptions, GradCheckReport};
pub use graph::stop_probabilities;
pub use graph::{Graph, NodeId};
pub use ops::{cross_entropy, layer_norm, scaled_dot_attention, softmax};
pub use params::{ParamId, ParamStore, Parameter};
pub use tensor::Tensor;
