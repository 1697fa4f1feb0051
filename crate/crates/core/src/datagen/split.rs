use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Seeded holdout split returning `(train, validation)`.
///
/// The validation set has `round(fraction · n)` items, rounding halves up.
/// Both parts keep the input order.
pub fn split<T: Clone>(data: &[T], holdout_fraction: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "holdout fraction {holdout_fraction} outside (0, 1)"
        )));
    }
    let n = data.len();
    let n_val = (holdout_fraction * n as f64 + 0.5).floor() as usize;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut in_val = vec![false; n];
    for &i in &idx[..n_val.min(n)] {
        in_val[i] = true;
    }
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for (item, v) in data.iter().zip(in_val) {
        if v {
            val.push(item.clone());
        } else {
            train.push(item.clone());
        }
    }
    Ok((train, val))
}
