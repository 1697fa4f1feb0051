//! Central finite-difference gradient checking.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::graph::{Graph, NodeId};
use super::params::{ParamId, ParamStore};
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct GradCheckOptions {
    pub eps: f64,
    /// Number of coordinates to probe; every coordinate when it exceeds the total.
    pub samples: usize,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            eps: 1e-3,
            samples: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
    /// Parameter name and flat index of the worst coordinate.
    pub worst: Option<(String, usize)>,
}

/// `|a − n| / max(1e-8, |a| + |n|)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

/// Compares analytic gradients of `loss_fn` against central differences
/// on sampled parameter coordinates. `loss_fn` must be deterministic.
pub fn grad_check<F>(
    store: &mut ParamStore,
    mut loss_fn: F,
    opts: &GradCheckOptions,
) -> Result<GradCheckReport>
where
    F: FnMut(&mut Graph, &ParamStore) -> Result<NodeId>,
{
    store.zero_grad();
    let mut g = Graph::new();
    let loss = loss_fn(&mut g, store)?;
    g.backward(loss)?;
    g.accumulate_into(store);

    let coords: Vec<(ParamId, usize)> = store
        .iter()
        .flat_map(|(id, p)| (0..p.value.len()).map(move |i| (id, i)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let picked: Vec<usize> = if opts.samples >= coords.len() {
        (0..coords.len()).collect()
    } else {
        rand::seq::index::sample(&mut rng, coords.len(), opts.samples).into_vec()
    };

    let mut eval = |store: &ParamStore| -> Result<f64> {
        let mut g = Graph::new();
        let l = loss_fn(&mut g, store)?;
        g.value(l).item()
    };

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        checked: 0,
        worst: None,
    };
    for k in picked {
        let (pid, i) = coords[k];
        let analytic = store.get(pid).grad.values()[i];
        let orig = store.get(pid).value.values()[i];
        store.get_mut(pid).value.values_mut()[i] = orig + opts.eps;
        let plus = eval(store)?;
        store.get_mut(pid).value.values_mut()[i] = orig - opts.eps;
        let minus = eval(store)?;
        store.get_mut(pid).value.values_mut()[i] = orig;
        let numeric = (plus - minus) / (2.0 * opts.eps);
        let err = relative_error(analytic, numeric);
        report.checked += 1;
        if err > report.max_rel_error || report.worst.is_none() {
            report.max_rel_error = report.max_rel_error.max(err);
            report.worst = Some((store.get(pid).name.clone(), i));
        }
    }
    Ok(report)
}
