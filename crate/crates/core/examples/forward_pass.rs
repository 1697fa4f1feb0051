//! Per-step class probabilities and stop/wait policy of an untrained model,
//! plus the head-averaged temporal attention that gates the spatial cache.
//!
//! cargo run --example forward_pass

use multimodal_early::datagen::{generate_paired_dataset, PairedConfig};
use multimodal_early::numcore::Graph;
use multimodal_early::sttransformer::{ModelConfig, SpatialTemporalModel};

fn main() -> multimodal_early::Result<()> {
    let task = PairedConfig {
        samples: 1,
        ..PairedConfig::default()
    };
    let seq = &generate_paired_dataset(&task)?[0];
    let model = SpatialTemporalModel::new(ModelConfig::for_paired(&task, 32, 4, 8), 3)?;

    let out = model.forward_all_t(&seq.elements)?;
    println!("signature {}", seq.signature());
    for t in 0..out.steps() {
        println!(
            "t={} y_hat {:.3?} wait {:.3} stop {:.3}",
            t + 1,
            out.y_hat.row(t),
            out.wait(t),
            out.stop(t)
        );
    }

    let mut g = Graph::new();
    let nodes = model.forward_graph(&mut g, model.params(), &seq.elements)?;
    let w = g.value(nodes.temporal_weights[0]);
    println!("temporal attention (row t attends to columns <= t):");
    for t in 0..w.rows() {
        println!("  {:.2?}", w.row(t));
    }
    Ok(())
}
