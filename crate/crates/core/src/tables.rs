//! Per-agent tables over local states `(z_i, x_i)`.
//!
//! Q-values, strategies and consistent models all have the same layout: one
//! row per `(z, x)` pair (row index `z·|X| + x`) and one column per action or
//! signal. They differ only in what the columns mean and which invariants the
//! rows satisfy.

use serde::{Deserialize, Serialize};

use crate::error::{EeeError, Result};
use crate::game_model::GameSpec;

/// Dense `(z, x) → R^width` table for a single agent.
#[derive(Clone, Debug, PartialEq)]
pub struct StateTable {
    n_memory: usize,
    n_states: usize,
    width: usize,
    data: Vec<f64>,
}

impl StateTable {
    pub fn zeros(n_memory: usize, n_states: usize, width: usize) -> Self {
        StateTable {
            n_memory,
            n_states,
            width,
            data: vec![0.0; n_memory * n_states * width],
        }
    }

    pub fn from_rows(n_memory: usize, n_states: usize, rows: &[Vec<f64>]) -> Result<Self> {
        if rows.len() != n_memory * n_states {
            return Err(EeeError::Structural(format!(
                "table has {} rows, expected |Z|·|X| = {}",
                rows.len(),
                n_memory * n_states
            )));
        }
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(EeeError::Structural("ragged table rows".into()));
        }
        Ok(StateTable {
            n_memory,
            n_states,
            width,
            data: rows.concat(),
        })
    }

    #[inline]
    pub fn row_index(&self, z: usize, x: usize) -> usize {
        z * self.n_states + x
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.width..(r + 1) * self.width]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.width..(r + 1) * self.width]
    }

    #[inline]
    pub fn at(&self, z: usize, x: usize) -> &[f64] {
        self.row(self.row_index(z, x))
    }

    #[inline]
    pub fn get(&self, z: usize, x: usize, c: usize) -> f64 {
        self.data[self.row_index(z, x) * self.width + c]
    }

    pub fn n_rows(&self) -> usize {
        self.n_memory * self.n_states
    }

    pub fn n_memory(&self) -> usize {
        self.n_memory
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.n_memory == other.n_memory && self.n_states == other.n_states && self.width == other.width
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |self − other|` over every entry.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if !self.same_shape(other) {
            return Err(EeeError::Structural("tables of different shape".into()));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_rows()).map(|r| self.row(r).to_vec()).collect()
    }

    fn is_probability_rows(&self, tol: f64) -> bool {
        (0..self.n_rows()).all(|r| {
            let row = self.row(r);
            row.iter().all(|&p| p >= -tol) && (row.iter().sum::<f64>() - 1.0).abs() <= tol
        })
    }
}

macro_rules! per_agent_table {
    ($(#[$doc:meta])* $name:ident, $width:ident) => {
        $(#[$doc])*
        #[derive(Clone, Debug, PartialEq)]
        pub struct $name {
            pub agents: Vec<StateTable>,
        }

        impl $name {
            pub fn zeros(spec: &GameSpec) -> Self {
                $name {
                    agents: spec
                        .agents
                        .iter()
                        .map(|a| StateTable::zeros(a.n_memory, a.n_states, a.$width))
                        .collect(),
                }
            }

            /// Builds from per-agent row arrays, checking them against `spec`.
            pub fn from_rows(spec: &GameSpec, rows: &[Vec<Vec<f64>>]) -> Result<Self> {
                if rows.len() != spec.n_agents() {
                    return Err(EeeError::Structural(format!(
                        "{} agent tables for {} agents",
                        rows.len(),
                        spec.n_agents()
                    )));
                }
                let agents = spec
                    .agents
                    .iter()
                    .zip(rows)
                    .enumerate()
                    .map(|(i, (a, r))| {
                        let t = StateTable::from_rows(a.n_memory, a.n_states, r)?;
                        if t.width() != a.$width {
                            return Err(EeeError::Structural(format!(
                                "agent {} table has {} columns, expected {}",
                                i + 1,
                                t.width(),
                                a.$width
                            )));
                        }
                        Ok(t)
                    })
                    .collect::<Result<_>>()?;
                Ok($name { agents })
            }

            pub fn to_rows(&self) -> Vec<Vec<Vec<f64>>> {
                self.agents.iter().map(StateTable::to_rows).collect()
            }

            pub fn matches(&self, spec: &GameSpec) -> bool {
                self.agents.len() == spec.n_agents()
                    && self.agents.iter().zip(&spec.agents).all(|(t, a)| {
                        t.n_memory() == a.n_memory && t.n_states() == a.n_states && t.width() == a.$width
                    })
            }

            pub(crate) fn check_shape(&self, spec: &GameSpec) -> Result<()> {
                if self.matches(spec) {
                    Ok(())
                } else {
                    Err(EeeError::Structural(format!(
                        "{} dimensions do not match the game",
                        stringify!($name)
                    )))
                }
            }

            /// Max-metric: largest absolute entry difference over all agents.
            pub fn distance(&self, other: &Self) -> Result<f64> {
                if self.agents.len() != other.agents.len() {
                    return Err(EeeError::Structural("different number of agents".into()));
                }
                self.agents
                    .iter()
                    .zip(&other.agents)
                    .try_fold(0.0f64, |m, (a, b)| Ok(m.max(a.max_abs_diff(b)?)))
            }

            pub fn sup_norm(&self) -> f64 {
                self.agents.iter().fold(0.0, |m, t| m.max(t.sup_norm()))
            }
        }
    };
}

per_agent_table!(
    /// `Q_i(z_i, x_i, a_i)` for every agent.
    QTable,
    n_actions
);
per_agent_table!(
    /// `σ_i(z_i, x_i)[a_i]`, a probability vector over actions per local state.
    Strategy,
    n_actions
);
per_agent_table!(
    /// `μ_i(z_i, x_i)[s_i]`, an agent's belief about its next signal.
    ConsistentModel,
    n_signals
);

impl Strategy {
    /// Every agent plays `actions[i]` everywhere.
    pub fn constant(spec: &GameSpec, actions: &[usize]) -> Result<Self> {
        if actions.len() != spec.n_agents() {
            return Err(EeeError::Structural("one action per agent required".into()));
        }
        let mut sigma = Strategy::zeros(spec);
        for ((t, a), &act) in sigma.agents.iter_mut().zip(&spec.agents).zip(actions) {
            if act >= a.n_actions {
                return Err(EeeError::Structural(format!("action {} out of range", act + 1)));
            }
            for r in 0..t.n_rows() {
                t.row_mut(r)[act] = 1.0;
            }
        }
        Ok(sigma)
    }

    pub fn uniform(spec: &GameSpec) -> Self {
        let mut sigma = Strategy::zeros(spec);
        for t in &mut sigma.agents {
            let w = t.width() as f64;
            t.data_mut().iter_mut().for_each(|p| *p = 1.0 / w);
        }
        sigma
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        self.agents.iter().all(|t| t.is_probability_rows(tol))
    }

    pub fn is_deterministic(&self) -> bool {
        self.agents
            .iter()
            .all(|t| t.data().iter().all(|&p| p == 0.0 || p == 1.0))
            && self.is_valid(0.0)
    }

    /// The action with the largest probability per `(z, x)` row (first on ties).
    pub fn chosen_actions(&self) -> Vec<Vec<usize>> {
        self.agents
            .iter()
            .map(|t| {
                (0..t.n_rows())
                    .map(|r| {
                        let row = t.row(r);
                        (0..row.len()).fold(0, |best, a| if row[a] > row[best] { a } else { best })
                    })
                    .collect()
            })
            .collect()
    }
}

impl ConsistentModel {
    pub fn uniform(spec: &GameSpec) -> Self {
        let mut mu = ConsistentModel::zeros(spec);
        for t in &mut mu.agents {
            let w = t.width() as f64;
            t.data_mut().iter_mut().for_each(|p| *p = 1.0 / w);
        }
        mu
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        self.agents.iter().all(|t| t.is_probability_rows(tol))
    }
}

/// On-disk form of a strategy or model: `{"agents": [[row, ...], ...]}` with
/// rows ordered `(z, x) = (1,1), (1,2), …` exactly like the game file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TableFile {
    pub agents: Vec<Vec<Vec<f64>>>,
}

impl TableFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

impl From<&Strategy> for TableFile {
    fn from(s: &Strategy) -> Self {
        TableFile { agents: s.to_rows() }
    }
}

impl From<&ConsistentModel> for TableFile {
    fn from(m: &ConsistentModel) -> Self {
        TableFile { agents: m.to_rows() }
    }
}

impl From<&QTable> for TableFile {
    fn from(q: &QTable) -> Self {
        TableFile { agents: q.to_rows() }
    }
}
