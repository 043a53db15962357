use thiserror::Error;

use crate::game_model::Violation;

pub type Result<T, E = EeeError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum EeeError {
    /// An argument outside its mathematical domain (alpha, temperature, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Tables or kernels whose shapes do not line up.
    #[error("structural error: {0}")]
    Structural(String),

    #[error("chain may violate the ergodicity assumption (residual {residual:e}): {detail}")]
    NotErgodic { residual: f64, detail: String },

    #[error(
        "state (z={z}, x={x}) of agent {agent} has vanishing stationary mass {mass:e}",
        agent = agent + 1,
        z = z + 1,
        x = x + 1
    )]
    VanishingMass {
        agent: usize,
        z: usize,
        x: usize,
        mass: f64,
    },

    #[error("minimal mass violated for agent {}: m_i = {mass:e}", agent + 1)]
    MinimalMass { agent: usize, mass: f64 },

    #[error("{0}")]
    MissingReference(String),

    #[error("joint state space of {0} states exceeds the dense-matrix guard")]
    TooLarge(usize),

    #[error("iteration {iter}: {source}")]
    AtIteration {
        iter: usize,
        #[source]
        source: Box<EeeError>,
    },

    #[error("invalid game specification: {}", format_violations(.0))]
    InvalidSpec(Vec<Violation>),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl EeeError {
    pub(crate) fn at_iteration(self, iter: usize) -> Self {
        EeeError::AtIteration {
            iter,
            source: Box::new(self),
        }
    }
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}
