//! Empirical-evidence equilibria of finite multi-agent games.
//!
//! Agents see private signals, keep a finite memory of them and act on a
//! local state. Each agent reasons with its own model of the signal process;
//! the model is *consistent* when it equals the long-run conditional signal
//! frequencies produced by the true dynamics under everyone's strategies.
//!
//! * [`game_model`]: game specifications, validation, file format.
//! * [`chain_analysis`]: the exact joint chain, stationary distributions,
//!   consistent models and perturbation diagnostics.
//! * [`learning`]: greedy and softmax Q-value iteration and equilibrium checks.
//! * [`coupling_bounds`]: coupling strength and closed-form stability bounds.
//! * [`empirical`]: Monte Carlo estimates of consistent models.
//! * [`export`]: CSV renderings.

pub mod chain_analysis;
pub mod coupling_bounds;
pub mod empirical;
pub mod error;
pub mod export;
pub mod game_model;
pub mod kernel;
pub mod learning;
pub mod tables;

pub use error::{EeeError, Result};
pub use game_model::{
    build_example1, interpolate, validate_spec, ConvexFamily, GameSpec, JointIndexer, JointState,
};
pub use kernel::StochasticKernel;
pub use tables::{ConsistentModel, QTable, StateTable, Strategy, TableFile};
pub use learning::{PolicyRule, RunOptions};
