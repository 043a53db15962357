use rand::Rng;

use super::{AgentSpec, ConvexFamily, GameSpec, MemoryRule, RewardTable};
use crate::kernel::StochasticKernel;
use crate::tables::Strategy;

/// Shape limits for [`random_family`].
#[derive(Clone, Debug)]
pub struct RandomGameConfig {
    pub max_agents: usize,
    /// Upper bound on `|W|`, `|X_i|`, `|A_i|`, `|S_i|` and `|Z_i|`.
    pub max_dim: usize,
    /// Smallest probability in any generated kernel row (before normalization).
    pub floor: f64,
    pub max_reward: f64,
}

impl Default for RandomGameConfig {
    fn default() -> Self {
        RandomGameConfig {
            max_agents: 2,
            max_dim: 3,
            floor: 0.05,
            max_reward: 10.0,
        }
    }
}

fn random_kernel<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, floor: f64) -> StochasticKernel {
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        let row: Vec<f64> = (0..cols).map(|_| floor + rng.gen::<f64>()).collect();
        let sum: f64 = row.iter().sum();
        data.extend(row.into_iter().map(|v| v / sum));
    }
    StochasticKernel::new(rows, cols, data).expect("shape by construction")
}

/// A random ergodic game with coupled kernels and uncoupled references.
///
/// Every kernel entry is strictly positive and the memory rule
/// `l(z, s) = (z + s) mod |Z|` with `|Z| ≤ |S|` reaches every memory state in
/// one step, so every joint chain is irreducible and aperiodic.
pub fn random_family<R: Rng + ?Sized>(rng: &mut R, cfg: &RandomGameConfig) -> ConvexFamily {
    let n_agents = rng.gen_range(1..=cfg.max_agents.max(1));
    let dim = |rng: &mut R| rng.gen_range(1..=cfg.max_dim.max(1));
    let n_env = dim(rng);
    let mut agents = Vec::with_capacity(n_agents);
    for _ in 0..n_agents {
        let n_states = dim(rng);
        let n_actions = dim(rng);
        let n_signals = dim(rng);
        let n_memory = rng.gen_range(1..=n_signals);
        let next = (0..n_memory)
            .flat_map(|z| (0..n_signals).map(move |s| (z + s) % n_memory))
            .collect();
        let reward = (0..n_states * n_actions * n_signals)
            .map(|_| rng.gen_range(-cfg.max_reward..=cfg.max_reward))
            .collect();
        agents.push(AgentSpec {
            n_states,
            n_actions,
            n_signals,
            n_memory,
            signal_kernel: random_kernel(rng, n_env, n_signals, cfg.floor),
            local_kernels: (0..n_actions)
                .map(|_| random_kernel(rng, n_states * n_signals, n_states, cfg.floor))
                .collect(),
            uncoupled_local: Some(random_kernel(rng, n_states * n_signals, n_states, cfg.floor)),
            memory_rule: MemoryRule::new(n_memory, n_signals, next).expect("shape by construction"),
            reward: RewardTable::new(n_states, n_actions, n_signals, reward)
                .expect("shape by construction"),
            discount: rng.gen_range(0.3..0.9),
            temperature: 1.0,
        });
    }
    let joint: usize = agents.iter().map(|a| a.n_actions).product();
    let base = GameSpec {
        n_env,
        env_kernels: (0..joint).map(|_| random_kernel(rng, n_env, n_env, cfg.floor)).collect(),
        uncoupled_env: Some(random_kernel(rng, n_env, n_env, cfg.floor)),
        agents,
    };
    ConvexFamily::new(base).expect("references are present")
}

/// A random strategy; deterministic when `deterministic` is set.
pub fn random_strategy<R: Rng + ?Sized>(rng: &mut R, spec: &GameSpec, deterministic: bool) -> Strategy {
    let mut sigma = Strategy::zeros(spec);
    for (i, agent) in spec.agents.iter().enumerate() {
        let table = &mut sigma.agents[i];
        for row in 0..agent.n_local() {
            let probs = table.row_mut(row);
            if deterministic {
                probs[rng.gen_range(0..agent.n_actions)] = 1.0;
            } else {
                let raw: Vec<f64> = (0..agent.n_actions).map(|_| rng.gen::<f64>() + 1e-3).collect();
                let sum: f64 = raw.iter().sum();
                probs.iter_mut().zip(raw).for_each(|(p, r)| *p = r / sum);
            }
        }
    }
    sigma
}
