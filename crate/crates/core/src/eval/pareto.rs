use super::TradeoffPoint;
use crate::error::{Error, Result};

/// Non-dominated points sorted by ascending `mean_t`, with strictly
/// increasing accuracy.
#[derive(Debug, Clone, PartialEq)]
pub struct Frontier {
    pub points: Vec<TradeoffPoint>,
}

/// `a` is no worse than `b` in both coordinates and strictly better in one.
pub fn dominates(a: &TradeoffPoint, b: &TradeoffPoint) -> bool {
    a.mean_t <= b.mean_t
        && a.accuracy >= b.accuracy
        && (a.mean_t < b.mean_t || a.accuracy > b.accuracy)
}

pub fn pareto_frontier(points: &[TradeoffPoint]) -> Result<Frontier> {
    if points.is_empty() {
        return Err(Error::InvalidArgument(
            "pareto frontier of an empty point set".into(),
        ));
    }
    if let Some(p) = points
        .iter()
        .find(|p| !p.mean_t.is_finite() || !p.accuracy.is_finite())
    {
        return Err(Error::InvalidArgument(format!(
            "non-finite tradeoff point {p:?}"
        )));
    }
    let mut sorted = points.to_vec();
    // stable: the first of several identical points survives
    sorted.sort_by(|a, b| {
        a.mean_t
            .total_cmp(&b.mean_t)
            .then(b.accuracy.total_cmp(&a.accuracy))
    });
    let mut out: Vec<TradeoffPoint> = Vec::new();
    for p in sorted {
        if out.last().is_none_or(|q| p.accuracy > q.accuracy) {
            out.push(p);
        }
    }
    Ok(Frontier { points: out })
}

/// Area under the frontier's step function over normalized time
/// `x = (T − 1) / (T_end − 1)`. Left of the first point the curve sits at
/// `chance`; after the last point it holds that point's accuracy.
pub fn frontier_auc(frontier: &Frontier, t_end: usize, chance: f64) -> Result<f64> {
    if t_end < 2 {
        return Err(Error::InvalidArgument(format!(
            "frontier AUC needs T_end >= 2, got {t_end}"
        )));
    }
    let pts = &frontier.points;
    if pts.is_empty() {
        return Err(Error::InvalidArgument("empty frontier".into()));
    }
    let x = |p: &TradeoffPoint| ((p.mean_t - 1.0) / (t_end as f64 - 1.0)).clamp(0.0, 1.0);
    let mut area = chance * x(&pts[0]);
    for (i, p) in pts.iter().enumerate() {
        let right = pts.get(i + 1).map_or(1.0, x);
        area += p.accuracy * (right - x(p));
    }
    Ok(area)
}
