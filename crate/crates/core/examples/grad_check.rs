//! Central-difference check of the full model gradient under both losses.
//!
//! cargo run --release --example grad_check

use multimodal_early::datagen::{generate_paired_dataset, PairedConfig};
use multimodal_early::numcore::{grad_check, GradCheckOptions};
use multimodal_early::objectives::{cis_loss_graph, larm_loss_graph};
use multimodal_early::sttransformer::{ModelConfig, SpatialTemporalModel};

fn main() -> multimodal_early::Result<()> {
    let task = PairedConfig {
        samples: 1,
        grid: 4,
        patch: 2,
        ..PairedConfig::default()
    };
    let seq = &generate_paired_dataset(&task)?[0];
    let model = SpatialTemporalModel::new(ModelConfig::for_paired(&task, 16, 2, 8), 5)?;
    let opts = GradCheckOptions {
        eps: 1e-3,
        samples: 100,
        seed: 1,
    };
    let mask = vec![false; seq.t_end()];

    for name in ["cis", "larm"] {
        let mut store = model.params().clone();
        let report = grad_check(
            &mut store,
            |g, s| {
                let n = model.forward_graph(g, s, &seq.elements)?;
                match name {
                    "cis" => cis_loss_graph(g, &seq.label, n.y_hat, n.pi, 0.05, 1.0),
                    _ => larm_loss_graph(g, &seq.label, n.y_hat, n.pi, 0.05, &mask),
                }
            },
            &opts,
        )?;
        println!(
            "{name}: {} coordinates, max relative error {:e}, worst {:?}",
            report.checked, report.max_rel_error, report.worst
        );
    }
    Ok(())
}
