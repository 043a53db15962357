use serde::{Deserialize, Serialize};

use crate::error::{EeeError, Result};
use crate::game_model::GameSpec;
use crate::tables::{QTable, StateTable, Strategy};

/// How strategies are derived from Q-values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum PolicyRule {
    Greedy,
    /// Per-agent temperatures `τ_i > 0`.
    Softmax { tau: Vec<f64> },
}

impl PolicyRule {
    pub fn softmax(tau: Vec<f64>) -> Result<Self> {
        check_temperatures(&tau)?;
        Ok(PolicyRule::Softmax { tau })
    }

    /// Softmax with the temperatures stored in the game.
    pub fn softmax_from_spec(spec: &GameSpec) -> Result<Self> {
        Self::softmax(spec.agents.iter().map(|a| a.temperature).collect())
    }

    pub fn is_greedy(&self) -> bool {
        matches!(self, PolicyRule::Greedy)
    }

    pub fn apply(&self, q: &QTable) -> Result<Strategy> {
        match self {
            PolicyRule::Greedy => Ok(greedy_policy(q)),
            PolicyRule::Softmax { tau } => softmax_policy(q, tau),
        }
    }

    pub(crate) fn check(&self, spec: &GameSpec) -> Result<()> {
        if let PolicyRule::Softmax { tau } = self {
            check_temperatures(tau)?;
            if tau.len() != spec.n_agents() {
                return Err(EeeError::Structural(format!(
                    "{} temperatures for {} agents",
                    tau.len(),
                    spec.n_agents()
                )));
            }
        }
        Ok(())
    }
}

fn check_temperatures(tau: &[f64]) -> Result<()> {
    match tau.iter().position(|t| !(*t > 0.0) || !t.is_finite()) {
        Some(i) => Err(EeeError::Domain(format!(
            "temperature of agent {} must be positive, got {}",
            i + 1,
            tau[i]
        ))),
        None => Ok(()),
    }
}

/// First index of the largest entry.
#[inline]
pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (a, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = a;
        }
    }
    best
}

fn empty_like(q: &QTable) -> Strategy {
    Strategy {
        agents: q
            .agents
            .iter()
            .map(|t| StateTable::zeros(t.n_memory(), t.n_states(), t.width()))
            .collect(),
    }
}

/// Puts all mass on the best action; ties go to the lowest index.
pub fn greedy_policy(q: &QTable) -> Strategy {
    let mut sigma = empty_like(q);
    for (s, qt) in sigma.agents.iter_mut().zip(&q.agents) {
        for r in 0..qt.n_rows() {
            s.row_mut(r)[argmax(qt.row(r))] = 1.0;
        }
    }
    sigma
}

/// `σ(a) ∝ exp(Q(a)/τ)`, evaluated after subtracting the row maximum.
pub fn softmax_policy(q: &QTable, tau: &[f64]) -> Result<Strategy> {
    check_temperatures(tau)?;
    if tau.len() != q.agents.len() {
        return Err(EeeError::Structural(format!(
            "{} temperatures for {} agents",
            tau.len(),
            q.agents.len()
        )));
    }
    let mut sigma = empty_like(q);
    for ((s, qt), &t) in sigma.agents.iter_mut().zip(&q.agents).zip(tau) {
        for r in 0..qt.n_rows() {
            let row = qt.row(r);
            let top = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let out = s.row_mut(r);
            let mut total = 0.0;
            for (o, &v) in out.iter_mut().zip(row) {
                *o = ((v - top) / t).exp();
                total += *o;
            }
            out.iter_mut().for_each(|o| *o /= total);
        }
    }
    Ok(sigma)
}
