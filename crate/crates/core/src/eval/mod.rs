//! Rollouts, tradeoff points, Pareto frontiers and stopping statistics.

mod io;
mod pareto;
mod rollout;
mod stats;

pub use io::{
    read_frontier_csv, read_points_csv, write_auc_summary_csv, write_flows_csv, write_frontier_csv,
    write_histogram_csv, write_points_csv, AucRow,
};
pub use pareto::{dominates, frontier_auc, pareto_frontier, Frontier};
pub use rollout::{
    argmax, evaluate, rollout, rollout_cis, rollout_cis_outputs, rollout_larm,
    rollout_larm_outputs, rollouts, Evaluation, Method, Rollout,
};
pub use stats::{flow_table, spearman, stopping_time_histogram, FlowRow};

use serde::{Deserialize, Serialize};

/// One (mean stopping time, accuracy) measurement, tagged with its sweep cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub mu: f64,
    pub trial: usize,
    pub epoch: usize,
    #[serde(rename = "mean_T")]
    pub mean_t: f64,
    pub accuracy: f64,
}

impl TradeoffPoint {
    /// Untagged point, handy for frontier arithmetic.
    pub fn at(mean_t: f64, accuracy: f64) -> Self {
        Self {
            mu: 0.0,
            trial: 0,
            epoch: 0,
            mean_t,
            accuracy,
        }
    }
}
