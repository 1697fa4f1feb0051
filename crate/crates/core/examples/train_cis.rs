//! Trains a small model with the CIS objective and rolls it out.
//!
//! cargo run --release --example train_cis

use multimodal_early::datagen::{generate_paired_dataset, PairedConfig};
use multimodal_early::eval::{rollouts, stopping_time_histogram, Method};
use multimodal_early::trainer::{train, TrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> multimodal_early::Result<()> {
    let task = PairedConfig {
        samples: 600,
        generic_affinity: 3.0,
        ..PairedConfig::default()
    };
    let data = generate_paired_dataset(&task)?;
    let (train_set, val) = data.split_at(500);
    let cfg = TrainConfig {
        objective: Method::Cis,
        mu: 1e-2,
        learning_rate: 3e-3,
        epochs: 12,
        batch_size: 32,
        heads: 4,
        head_dim: 8,
        head_hidden: 32,
        ..TrainConfig::default()
    };
    let model_cfg = cfg.model_config(&data)?;
    let outcome = train(train_set, val, &model_cfg, &cfg)?;
    for e in &outcome.log {
        println!(
            "epoch {} loss {:.4} mean_T {:.3} acc {:.3}",
            e.epoch, e.loss, e.mean_t, e.accuracy
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let rs = rollouts(&outcome.model, val, Method::Cis, &mut rng)?;
    println!(
        "stopping times: {:?}",
        stopping_time_histogram(&rs, task.t_end())?
    );
    Ok(())
}
