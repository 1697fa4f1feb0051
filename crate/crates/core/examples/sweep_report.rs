//! A small mu sweep for both objectives, summarized as Pareto frontiers.
//!
//! cargo run --release --example sweep_report

use multimodal_early::datagen::{generate_paired_dataset, PairedConfig};
use multimodal_early::eval::{frontier_auc, pareto_frontier, spearman, Method, TradeoffPoint};
use multimodal_early::trainer::{sweep, TrainConfig};

fn main() -> multimodal_early::Result<()> {
    let task = PairedConfig {
        samples: 440,
        generic_affinity: 3.0,
        ..PairedConfig::default()
    };
    let data = generate_paired_dataset(&task)?;
    let (train_set, val) = data.split_at(400);
    let mus = [1e-3, 1e-2, 1e-1];

    for method in [Method::Cis, Method::Larm] {
        let cfg = TrainConfig {
            objective: method,
            learning_rate: 3e-3,
            epochs: 4,
            batch_size: 32,
            heads: 4,
            head_dim: 8,
            head_hidden: 32,
            ..TrainConfig::default()
        };
        let model_cfg = cfg.model_config(&data)?;
        let cells = sweep(train_set, val, &model_cfg, &cfg, &mus, 1, 1)?;

        let mut points: Vec<TradeoffPoint> = Vec::new();
        let (mut log_mu, mut final_t) = (Vec::new(), Vec::new());
        for cell in &cells {
            let Ok(out) = &cell.result else { continue };
            points.extend(&out.points);
            if let Some(last) = out.points.last() {
                log_mu.push(cell.mu.ln());
                final_t.push(last.mean_t);
            }
        }
        let frontier = pareto_frontier(&points)?;
        println!("{method}:");
        for p in &frontier.points {
            println!(
                "  mu {:<6} epoch {} mean_T {:.3} acc {:.3}",
                p.mu, p.epoch, p.mean_t, p.accuracy
            );
        }
        println!(
            "  AUC {:.4}, spearman(ln mu, mean_T) {:?}",
            frontier_auc(&frontier, task.t_end(), 0.5)?,
            spearman(&log_mu, &final_t)?
        );
    }
    Ok(())
}
