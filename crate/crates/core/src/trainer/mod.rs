//! Minibatch training and μ sweeps.

mod adam;
mod sweep;

pub use adam::Adam;
pub use sweep::{derive_seed, sweep, SweepCell};

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datagen::MultimodalSequence;
use crate::error::{Error, Result};
use crate::eval::{evaluate, Method, TradeoffPoint};
use crate::numcore::Graph;
use crate::objectives::{cis_loss_graph, larm_loss_graph, sample_wait_force_mask};
use crate::sttransformer::{ModelConfig, SpatialTemporalModel};

/// Training hyperparameters. Loadable from TOML; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub objective: Method,
    pub mu: f64,
    /// Policy-loss weight (CIS only).
    pub lambda: f64,
    /// Wait-forcing probability (LARM only).
    pub rho: f64,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub d_model: usize,
    pub heads: usize,
    pub head_dim: usize,
    pub head_hidden: usize,
    pub depth: usize,
    /// Evaluate every this many epochs; the last epoch is always evaluated.
    pub eval_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            objective: Method::Cis,
            mu: 1e-2,
            lambda: 1.0,
            rho: 0.9,
            batch_size: 128,
            learning_rate: 1e-5,
            epochs: 10,
            seed: 0,
            d_model: 32,
            heads: 8,
            head_dim: 64,
            head_hidden: 100,
            depth: 1,
            eval_every: 1,
        }
    }
}

impl TrainConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::InvalidArgument(m) => Error::InvalidArgument(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1".into());
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad(format!(
                "learning_rate must be >= 0, got {}",
                self.learning_rate
            ));
        }
        if !(self.mu.is_finite() && self.mu >= 0.0)
            || !(self.lambda.is_finite() && self.lambda >= 0.0)
            || !(0.0..=1.0).contains(&self.rho)
        {
            return bad("need mu >= 0, lambda >= 0 and rho in [0, 1]".into());
        }
        if self.eval_every == 0 {
            return bad("eval_every must be >= 1".into());
        }
        Ok(())
    }

    /// Architecture for `data` with this config's geometry.
    pub fn model_config(&self, data: &[MultimodalSequence]) -> Result<ModelConfig> {
        Ok(ModelConfig {
            head_hidden: self.head_hidden,
            depth: self.depth,
            ..ModelConfig::infer(data, self.d_model, self.heads, self.head_dim)?
        })
    }
}

/// One row of the training log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean training loss over the epoch's samples.
    pub loss: f64,
    #[serde(rename = "mean_T")]
    pub mean_t: f64,
    pub accuracy: f64,
    /// Mean per-step validation CE.
    pub step_ce: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: SpatialTemporalModel,
    pub log: Vec<EpochLog>,
    /// One point per evaluated epoch, tagged with `mu` and epoch.
    pub points: Vec<TradeoffPoint>,
}

fn sample_loss(
    model: &SpatialTemporalModel,
    g: &mut Graph,
    seq: &MultimodalSequence,
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<crate::numcore::NodeId> {
    let n = model.forward_graph(g, model.params(), &seq.elements)?;
    match cfg.objective {
        Method::Cis => cis_loss_graph(g, &seq.label, n.y_hat, n.pi, cfg.mu, cfg.lambda),
        Method::Larm => {
            let mask = sample_wait_force_mask(seq.t_end(), cfg.rho, rng);
            larm_loss_graph(g, &seq.label, n.y_hat, n.pi, cfg.mu, &mask)
        }
    }
}

/// Trains a fresh model (initialized from `cfg.seed`) on `train`,
/// evaluating on `val` after each evaluated epoch.
pub fn train(
    train: &[MultimodalSequence],
    val: &[MultimodalSequence],
    model_config: &ModelConfig,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    let model = SpatialTemporalModel::new(model_config.clone(), cfg.seed)?;
    train_model(model, train, val, cfg, |_| {})
}

/// Continues training `model`; `on_epoch` sees every log row as it is produced.
pub fn train_model(
    mut model: SpatialTemporalModel,
    train: &[MultimodalSequence],
    val: &[MultimodalSequence],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::InvalidArgument(
            "training and validation sets must be nonempty".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x005e_ed0f_7a1e);
    let mut adam = Adam::new(cfg.learning_rate);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut log = Vec::new();
    let mut points = Vec::new();
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (batch, idx) in order.chunks(cfg.batch_size).enumerate() {
            model.params_mut().zero_grad();
            let scale = 1.0 / idx.len() as f64;
            let mut batch_loss = 0.0;
            for &i in idx {
                let mut g = Graph::new();
                let loss = sample_loss(&model, &mut g, &train[i], cfg, &mut rng)?;
                let scaled = g.scale(loss, scale);
                g.backward(scaled)?;
                g.accumulate_into(model.params_mut());
                batch_loss += g.value(loss).item()?;
            }
            if !batch_loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    batch: batch + 1,
                    loss: batch_loss,
                });
            }
            total += batch_loss;
            adam.step(model.params_mut());
        }
        if epoch % cfg.eval_every == 0 || epoch == cfg.epochs {
            let mut eval_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, epoch, usize::MAX));
            let e = evaluate(&model, val, cfg.objective, &mut eval_rng)?;
            let row = EpochLog {
                epoch,
                loss: total / train.len() as f64,
                mean_t: e.mean_t,
                accuracy: e.accuracy,
                step_ce: e.step_ce,
            };
            on_epoch(&row);
            log.push(row);
            points.push(TradeoffPoint {
                mu: cfg.mu,
                trial: 0,
                epoch,
                mean_t: e.mean_t,
                accuracy: e.accuracy,
            });
        }
    }
    Ok(TrainOutcome { model, log, points })
}

/// Columns `epoch,loss,mean_T,accuracy,step_ce`.
pub fn write_log_csv(path: impl AsRef<Path>, log: &[EpochLog]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    for row in log {
        w.serialize(row)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests;
