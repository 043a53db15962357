//! JSON game-specification files.
//!
//! ```text
//! {
//!   "n_env": 4,
//!   "env_kernels": { "1,1": [[...], ...], "1,2": ..., ... },
//!   "uncoupled_env": [[...], ...],                      (optional)
//!   "agents": [{
//!     "n_states": 2, "n_actions": 2, "n_signals": 2, "n_memory": 2,
//!     "signal_kernel": [[...], ...],                    |W| x |S|
//!     "local_kernels": { "1": [[...]], "2": [[...]] },  rows (x,s), s fastest
//!     "uncoupled_local": [[...], ...],                  (optional)
//!     "memory_rule": [[1, 2], [1, 2]],                  |Z| x |S|, values in 1..=|Z|
//!     "reward": [[[g(x,a,s) for s] for a] for x],
//!     "discount": 0.7,
//!     "temperature": 1.0                                (optional, default 1)
//!   }]
//! }
//! ```
//!
//! Actions, signals and memory states are 1-based in files. Kernel rows
//! whose sums are within `1e-12` of one are renormalized on load.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{joint_action_label, AgentSpec, GameSpec, MemoryRule, RewardTable, Violation};
use crate::error::{EeeError, Result};
use crate::kernel::StochasticKernel;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSpecFile {
    pub n_env: usize,
    pub env_kernels: BTreeMap<String, StochasticKernel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncoupled_env: Option<StochasticKernel>,
    pub agents: Vec<AgentSpecFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpecFile {
    pub n_states: usize,
    pub n_actions: usize,
    pub n_signals: usize,
    pub n_memory: usize,
    pub signal_kernel: StochasticKernel,
    pub local_kernels: BTreeMap<String, StochasticKernel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncoupled_local: Option<StochasticKernel>,
    pub memory_rule: Vec<Vec<usize>>,
    pub reward: Vec<Vec<Vec<f64>>>,
    pub discount: f64,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
}

fn default_temperature() -> f64 {
    1.0
}

fn parse_tuple(key: &str, n: usize) -> Option<Vec<usize>> {
    let parts: Vec<usize> = key
        .split(',')
        .map(|p| p.trim().parse::<usize>().ok().filter(|&v| v >= 1).map(|v| v - 1))
        .collect::<Option<_>>()?;
    (parts.len() == n).then_some(parts)
}

impl GameSpecFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Converts to the in-memory game. Missing or surplus kernels and
    /// out-of-range indices are reported as [`EeeError::InvalidSpec`]; kernel
    /// contents are left for [`super::validate_spec`].
    pub fn into_spec(self) -> Result<GameSpec> {
        let mut violations = Vec::new();
        let action_dims: Vec<usize> = self.agents.iter().map(|a| a.n_actions).collect();
        let n_joint: usize = action_dims.iter().product();

        let mut env_slots: Vec<Option<StochasticKernel>> = vec![None; n_joint];
        for (key, mut kernel) in self.env_kernels {
            kernel.renormalize_rows();
            match parse_tuple(&key, action_dims.len()) {
                Some(a) if a.iter().zip(&action_dims).all(|(ai, d)| ai < d) => {
                    let flat = a.iter().zip(&action_dims).fold(0, |acc, (ai, d)| acc * d + ai);
                    env_slots[flat] = Some(kernel);
                }
                _ => violations.push(Violation::new(
                    format!("env_kernels[\"{key}\"]"),
                    "key is not a valid joint action",
                )),
            }
        }
        let mut env_kernels = Vec::with_capacity(n_joint);
        for (flat, slot) in env_slots.into_iter().enumerate() {
            match slot {
                Some(k) => env_kernels.push(k),
                None => {
                    let mut a = vec![0; action_dims.len()];
                    let mut rem = flat;
                    for i in (0..a.len()).rev() {
                        a[i] = rem % action_dims[i];
                        rem /= action_dims[i];
                    }
                    violations.push(Violation::new(
                        "env_kernels",
                        format!("missing kernel for joint action ({})", joint_action_label(&a)),
                    ));
                }
            }
        }

        let mut agents = Vec::with_capacity(self.agents.len());
        for (i, af) in self.agents.into_iter().enumerate() {
            let tag = format!("agent {}", i + 1);
            let mut slots: Vec<Option<StochasticKernel>> = vec![None; af.n_actions];
            for (key, mut kernel) in af.local_kernels {
                kernel.renormalize_rows();
                match key.trim().parse::<usize>() {
                    Ok(a) if (1..=af.n_actions).contains(&a) => slots[a - 1] = Some(kernel),
                    _ => violations.push(Violation::new(
                        format!("{tag} local_kernels[\"{key}\"]"),
                        "key is not a valid action",
                    )),
                }
            }
            let mut local_kernels = Vec::with_capacity(af.n_actions);
            for (a, slot) in slots.into_iter().enumerate() {
                match slot {
                    Some(k) => local_kernels.push(k),
                    None => violations.push(Violation::new(
                        format!("{tag} local_kernels"),
                        format!("missing kernel for action {}", a + 1),
                    )),
                }
            }

            let mut next = Vec::with_capacity(af.n_memory * af.n_signals);
            let rule_shape_ok = af.memory_rule.len() == af.n_memory
                && af.memory_rule.iter().all(|r| r.len() == af.n_signals);
            if !rule_shape_ok {
                violations.push(Violation::new(
                    format!("{tag} memory_rule"),
                    format!("expected a {}x{} table", af.n_memory, af.n_signals),
                ));
            } else {
                for (z, row) in af.memory_rule.iter().enumerate() {
                    for (s, &v) in row.iter().enumerate() {
                        if v == 0 || v > af.n_memory {
                            violations.push(Violation::new(
                                format!("{tag} memory_rule (z={}, s={})", z + 1, s + 1),
                                format!("next memory {v} outside 1..={}", af.n_memory),
                            ));
                        }
                        next.push(v.saturating_sub(1));
                    }
                }
            }

            let reward_shape_ok = af.reward.len() == af.n_states
                && af.reward.iter().all(|by_a| {
                    by_a.len() == af.n_actions && by_a.iter().all(|s| s.len() == af.n_signals)
                });
            if !reward_shape_ok {
                violations.push(Violation::new(
                    format!("{tag} reward"),
                    format!(
                        "expected a {}x{}x{} nested array",
                        af.n_states, af.n_actions, af.n_signals
                    ),
                ));
            }

            if !violations.is_empty() {
                continue;
            }
            let mut signal_kernel = af.signal_kernel;
            signal_kernel.renormalize_rows();
            let uncoupled_local = af.uncoupled_local.map(|mut k| {
                k.renormalize_rows();
                k
            });
            agents.push(AgentSpec {
                n_states: af.n_states,
                n_actions: af.n_actions,
                n_signals: af.n_signals,
                n_memory: af.n_memory,
                signal_kernel,
                local_kernels,
                uncoupled_local,
                memory_rule: MemoryRule::new(af.n_memory, af.n_signals, next)?,
                reward: RewardTable::new(
                    af.n_states,
                    af.n_actions,
                    af.n_signals,
                    af.reward.into_iter().flatten().flatten().collect(),
                )?,
                discount: af.discount,
                temperature: af.temperature,
            });
        }

        if !violations.is_empty() {
            return Err(EeeError::InvalidSpec(violations));
        }
        let uncoupled_env = self.uncoupled_env.map(|mut k| {
            k.renormalize_rows();
            k
        });
        Ok(GameSpec {
            n_env: self.n_env,
            env_kernels,
            uncoupled_env,
            agents,
        })
    }
}

impl From<&GameSpec> for GameSpecFile {
    fn from(spec: &GameSpec) -> Self {
        let dims = spec.action_dims();
        let env_kernels = spec
            .env_kernels
            .iter()
            .enumerate()
            .map(|(flat, k)| {
                let mut a = vec![0; dims.len()];
                let mut rem = flat;
                for i in (0..a.len()).rev() {
                    a[i] = rem % dims[i];
                    rem /= dims[i];
                }
                (joint_action_label(&a), k.clone())
            })
            .collect();
        let agents = spec
            .agents
            .iter()
            .map(|a| AgentSpecFile {
                n_states: a.n_states,
                n_actions: a.n_actions,
                n_signals: a.n_signals,
                n_memory: a.n_memory,
                signal_kernel: a.signal_kernel.clone(),
                local_kernels: a
                    .local_kernels
                    .iter()
                    .enumerate()
                    .map(|(i, k)| ((i + 1).to_string(), k.clone()))
                    .collect(),
                uncoupled_local: a.uncoupled_local.clone(),
                memory_rule: a
                    .memory_rule
                    .entries()
                    .chunks(a.n_signals.max(1))
                    .map(|r| r.iter().map(|z| z + 1).collect())
                    .collect(),
                reward: (0..a.n_states)
                    .map(|x| {
                        (0..a.n_actions)
                            .map(|act| (0..a.n_signals).map(|s| a.reward.get(x, act, s)).collect())
                            .collect()
                    })
                    .collect(),
                discount: a.discount,
                temperature: a.temperature,
            })
            .collect();
        GameSpecFile {
            n_env: spec.n_env,
            env_kernels,
            uncoupled_env: spec.uncoupled_env.clone(),
            agents,
        }
    }
}

impl GameSpec {
    pub fn from_json_str(text: &str) -> Result<GameSpec> {
        GameSpecFile::parse(text)?.into_spec()
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&GameSpecFile::from(self))?)
    }
}
