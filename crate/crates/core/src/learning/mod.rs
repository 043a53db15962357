//! Q-value iteration with consistent models.
//!
//! Each agent alternates between acting on its Q-values (greedily or through
//! a softmax), having its model of the signal process replaced by the exact
//! consistent model under everyone's current strategies, and applying one
//! Bellman update under that model.

mod bellman;
mod iteration;
mod policy;
mod verify;

pub use bellman::{bellman_update, q_fixed_point, state_values, FixedPoint, FIXED_POINT_TOL};
pub use iteration::{
    detect_cycle, q_value_iteration, CycleReport, IterationRecord, IterationTrace, Outcome,
    RunOptions, TerminationReport,
};
pub use policy::{greedy_policy, softmax_policy, PolicyRule};
pub use verify::{margin, verify_approx_eee, verify_eee, EeeReport};

use crate::error::Result;
use crate::tables::{QTable, Strategy};

/// `max_i max_{z,x,a} |σ_i(z,x)[a] − σ̄_i(z,x)[a]|`.
pub fn max_metric_strategy(sigma: &Strategy, sigma_bar: &Strategy) -> Result<f64> {
    sigma.distance(sigma_bar)
}

/// `max_i max_{z,x,a} |Q_i(z,x,a) − Q̄_i(z,x,a)|`.
pub fn max_metric_q(q: &QTable, q_bar: &QTable) -> Result<f64> {
    q.distance(q_bar)
}
