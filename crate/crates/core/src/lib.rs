//! Early classification of multimodal sequences.
//!
//! A spatial-temporal transformer reads a sequence element by element and,
//! at every step, emits a class distribution and a wait/stop policy. Two
//! training objectives are provided: Classifier-Induced Stopping ([`objectives::cis_loss`])
//! and LARM ([`objectives::larm_loss`]). The [`eval`] module turns trained
//! models into accuracy/timeliness tradeoff points, Pareto frontiers and
//! frontier AUCs.

pub mod cli;
pub mod datagen;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod numcore;
pub mod objectives;
pub mod sttransformer;
pub mod trainer;

pub use error::{Error, Result};
