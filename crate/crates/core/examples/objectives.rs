//! CIS and LARM losses on hand-written outputs.
//!
//! cargo run --example objectives

use multimodal_early::numcore::Tensor;
use multimodal_early::objectives::{
    cis_loss, cis_optimal_stop, cis_target_policy, larm_loss_with_mask, larm_stop_probabilities,
};
use multimodal_early::sttransformer::StepOutputs;

fn main() -> multimodal_early::Result<()> {
    let y = [1.0, 0.0];
    let outputs = StepOutputs {
        y_hat: Tensor::from_rows(&[vec![0.55, 0.45], vec![0.8, 0.2], vec![0.9, 0.1]])?,
        pi: Tensor::from_rows(&[vec![0.7, 0.3], vec![0.4, 0.6], vec![0.5, 0.5]])?,
    };

    for mu in [0.01, 0.1, 0.3] {
        let t = cis_optimal_stop(&y, &outputs.y_hat, mu)?;
        println!(
            "mu {mu}: optimal stop {t}, target policy {:?}",
            cis_target_policy(t, 3)?.values()
        );
        println!("  cis loss {:.4}", cis_loss(&y, &outputs, mu, 1.0)?);
    }

    let free = larm_stop_probabilities(&outputs.pi, None)?;
    let forced = larm_stop_probabilities(&outputs.pi, Some(&[true, false, false]))?;
    println!("stop distribution {free:.3?}, first step forced {forced:.3?}");
    for mask in [[false; 3], [true, false, false]] {
        println!(
            "larm loss mask {mask:?}: {:.4}",
            larm_loss_with_mask(&y, &outputs, 0.1, &mask)?
        );
    }
    Ok(())
}
