use rayon::prelude::*;

use super::{train, TrainConfig, TrainOutcome};
use crate::datagen::MultimodalSequence;
use crate::error::{Error, Result};
use crate::sttransformer::ModelConfig;

/// Seed for sweep cell `(mu_index, trial)`: a SplitMix64 mix of the three
/// inputs, so cells never share streams and ordering does not matter.
pub fn derive_seed(base: u64, mu_index: usize, trial: usize) -> u64 {
    let mut z = base
        ^ (mu_index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
        ^ (trial as u64).wrapping_mul(0xc2b2_ae3d_27d4_eb4f);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug)]
pub struct SweepCell {
    pub mu_index: usize,
    pub mu: f64,
    pub trial: usize,
    pub seed: u64,
    /// Points inside are tagged with this cell's `mu` and `trial`.
    pub result: Result<TrainOutcome>,
}

/// Trains one model per `(μ, trial)` cell on a pool of `workers` threads.
/// A failing cell records its error without stopping the others.
pub fn sweep(
    train_set: &[MultimodalSequence],
    val: &[MultimodalSequence],
    model_config: &ModelConfig,
    base: &TrainConfig,
    mus: &[f64],
    trials: usize,
    workers: usize,
) -> Result<Vec<SweepCell>> {
    if mus.is_empty() || trials == 0 {
        return Err(Error::InvalidArgument(
            "sweep needs at least one mu and one trial".into(),
        ));
    }
    let cells: Vec<(usize, usize)> = (0..mus.len())
        .flat_map(|i| (0..trials).map(move |t| (i, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    Ok(pool.install(|| {
        cells
            .par_iter()
            .map(|&(mu_index, trial)| {
                let seed = derive_seed(base.seed, mu_index, trial);
                let cfg = TrainConfig {
                    mu: mus[mu_index],
                    seed,
                    ..base.clone()
                };
                let result = train(train_set, val, model_config, &cfg).map(|mut out| {
                    for p in &mut out.points {
                        p.trial = trial;
                    }
                    out
                });
                SweepCell {
                    mu_index,
                    mu: mus[mu_index],
                    trial,
                    seed,
                    result,
                }
            })
            .collect()
    }))
}
