use std::collections::BTreeMap;

use super::Rollout;
use crate::datagen::MultimodalSequence;
use crate::error::{Error, Result};

/// `counts[T - 1]` is the number of rollouts stopping at `T`.
pub fn stopping_time_histogram(rollouts: &[Rollout], t_end: usize) -> Result<Vec<usize>> {
    if rollouts.is_empty() {
        return Err(Error::InvalidArgument("no rollouts".into()));
    }
    let mut counts = vec![0; t_end];
    for r in rollouts {
        if r.stop == 0 || r.stop > t_end {
            return Err(Error::InvalidArgument(format!(
                "stop {} outside 1..={t_end}",
                r.stop
            )));
        }
        counts[r.stop - 1] += 1;
    }
    Ok(counts)
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FlowRow {
    pub signature: String,
    #[serde(rename = "T")]
    pub t: usize,
    pub count: usize,
}

/// Stop counts grouped by modality-order signature, sorted by
/// (signature, T).
pub fn flow_table(data: &[MultimodalSequence], rollouts: &[Rollout]) -> Result<Vec<FlowRow>> {
    if data.len() != rollouts.len() || data.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{} sequences but {} rollouts",
            data.len(),
            rollouts.len()
        )));
    }
    let mut table: BTreeMap<(String, usize), usize> = BTreeMap::new();
    for (seq, r) in data.iter().zip(rollouts) {
        *table.entry((seq.signature(), r.stop)).or_default() += 1;
    }
    Ok(table
        .into_iter()
        .map(|((signature, t), count)| FlowRow {
            signature,
            t,
            count,
        })
        .collect())
}

fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties. `None` when
/// either side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "spearman needs two equal-length series of length >= 2, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some(sxy / (sxx * syy).sqrt()))
}
