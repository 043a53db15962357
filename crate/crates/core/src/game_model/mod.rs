//! Finite weakly-coupled stochastic games.
//!
//! A game consists of an environment with states `W` whose kernel `Φ(a)`
//! depends on the joint action, and agents that each receive a signal
//! `s_i ~ M_i(w)`, remember `z_i⁺ = l_i(z_i, s_i)` and move their local state
//! with `x_i⁺ ~ φ_i(x_i, s_i, a_i)`. Optional action-independent references
//! `Φ_U` and `φ_{U,i}` measure how strongly actions couple into the dynamics.
//!
//! All indices are 0-based here; the JSON file format in [`file`] is 1-based.

mod example1;
pub mod file;
mod random;

use std::fmt;

use crate::error::{EeeError, Result};
use crate::kernel::{RowDefect, StochasticKernel};

pub use example1::build_example1;
pub use random::{random_family, random_strategy, RandomGameConfig};

/// Games with more joint states than this are refused.
pub const MAX_JOINT_STATES: usize = 1_000_000;

/// Deterministic memory update `z⁺ = l(z, s)`, stored as a `|Z|×|S|` table.
#[derive(Clone, Debug, PartialEq)]
pub struct MemoryRule {
    n_memory: usize,
    n_signals: usize,
    next: Vec<usize>,
}

impl MemoryRule {
    pub fn new(n_memory: usize, n_signals: usize, next: Vec<usize>) -> Result<Self> {
        if next.len() != n_memory * n_signals {
            return Err(EeeError::Structural(format!(
                "memory rule has {} entries, expected {n_memory}x{n_signals}",
                next.len()
            )));
        }
        Ok(MemoryRule {
            n_memory,
            n_signals,
            next,
        })
    }

    /// `z⁺ = s`, the "remember the last signal" rule. Requires `|Z| = |S|`.
    pub fn last_signal(n_signals: usize) -> Self {
        let next = (0..n_signals).flat_map(|_| 0..n_signals).collect();
        MemoryRule {
            n_memory: n_signals,
            n_signals,
            next,
        }
    }

    #[inline]
    pub fn apply(&self, z: usize, s: usize) -> usize {
        self.next[z * self.n_signals + s]
    }

    pub fn n_memory(&self) -> usize {
        self.n_memory
    }

    pub fn n_signals(&self) -> usize {
        self.n_signals
    }

    pub fn entries(&self) -> &[usize] {
        &self.next
    }
}

/// Stage reward `g(x, a, s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RewardTable {
    n_states: usize,
    n_actions: usize,
    n_signals: usize,
    data: Vec<f64>,
}

impl RewardTable {
    pub fn new(n_states: usize, n_actions: usize, n_signals: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_states * n_actions * n_signals {
            return Err(EeeError::Structural(format!(
                "reward table has {} entries, expected {n_states}x{n_actions}x{n_signals}",
                data.len()
            )));
        }
        Ok(RewardTable {
            n_states,
            n_actions,
            n_signals,
            data,
        })
    }

    /// Reward that ignores the local state: `g(x, a, s) = by_action[a][s]`.
    pub fn state_independent(n_states: usize, by_action: &[Vec<f64>]) -> Result<Self> {
        let n_actions = by_action.len();
        let n_signals = by_action.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n_states * n_actions * n_signals);
        for _ in 0..n_states {
            for row in by_action {
                data.extend_from_slice(row);
            }
        }
        RewardTable::new(n_states, n_actions, n_signals, data)
    }

    #[inline]
    pub fn get(&self, x: usize, a: usize, s: usize) -> f64 {
        self.data[(x * self.n_actions + a) * self.n_signals + s]
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n_states, self.n_actions, self.n_signals)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// `G = max |g|`.
    pub fn sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// One agent of the game.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentSpec {
    pub n_states: usize,
    pub n_actions: usize,
    pub n_signals: usize,
    pub n_memory: usize,
    /// `M_i`, `|W| × |S_i|`.
    pub signal_kernel: StochasticKernel,
    /// `φ_i(·,·,a_i)` per action, rows indexed `x·|S_i| + s`.
    pub local_kernels: Vec<StochasticKernel>,
    pub uncoupled_local: Option<StochasticKernel>,
    pub memory_rule: MemoryRule,
    pub reward: RewardTable,
    pub discount: f64,
    pub temperature: f64,
}

impl AgentSpec {
    /// Number of `(z, x)` pairs.
    pub fn n_local(&self) -> usize {
        self.n_memory * self.n_states
    }

    /// `φ_i(x, s, a)[x⁺]`.
    #[inline]
    pub fn local(&self, a: usize, x: usize, s: usize, x_next: usize) -> f64 {
        self.local_kernels[a].get(x * self.n_signals + s, x_next)
    }

    pub fn reward_bound(&self) -> f64 {
        self.reward.sup_norm()
    }
}

/// The full game `N`.
#[derive(Clone, Debug, PartialEq)]
pub struct GameSpec {
    pub n_env: usize,
    /// `Φ(a)` indexed by the flat joint-action index (agent 1 most significant).
    pub env_kernels: Vec<StochasticKernel>,
    pub uncoupled_env: Option<StochasticKernel>,
    pub agents: Vec<AgentSpec>,
}

impl GameSpec {
    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn action_dims(&self) -> Vec<usize> {
        self.agents.iter().map(|a| a.n_actions).collect()
    }

    pub fn joint_action_count(&self) -> usize {
        self.agents.iter().map(|a| a.n_actions).product()
    }

    pub fn indexer(&self) -> Result<JointIndexer> {
        JointIndexer::new(
            self.n_env,
            self.agents.iter().map(|a| a.n_memory).collect(),
            self.agents.iter().map(|a| a.n_states).collect(),
            self.action_dims(),
        )
    }

    pub fn has_references(&self) -> bool {
        self.uncoupled_env.is_some() && self.agents.iter().all(|a| a.uncoupled_local.is_some())
    }

    /// Fills in missing uncoupled references with the action average of the
    /// coupled kernels. Returns whether anything had to be filled in.
    pub fn with_fallback_references(&self) -> Result<(GameSpec, bool)> {
        let mut out = self.clone();
        let mut filled = false;
        if out.uncoupled_env.is_none() {
            out.uncoupled_env = Some(StochasticKernel::mean(&self.env_kernels)?);
            filled = true;
        }
        for agent in &mut out.agents {
            if agent.uncoupled_local.is_none() {
                agent.uncoupled_local = Some(StochasticKernel::mean(&agent.local_kernels)?);
                filled = true;
            }
        }
        Ok((out, filled))
    }

    /// The game in which every action kernel is replaced by its uncoupled
    /// reference, so the dynamics no longer depend on actions.
    pub fn uncoupled_game(&self) -> Result<GameSpec> {
        let env = self.uncoupled_env.clone().ok_or_else(|| {
            EeeError::MissingReference("uncoupled environment kernel Φ_U is not supplied".into())
        })?;
        let mut out = self.clone();
        out.env_kernels = vec![env; self.joint_action_count()];
        for (i, agent) in out.agents.iter_mut().enumerate() {
            let local = agent.uncoupled_local.clone().ok_or_else(|| {
                EeeError::MissingReference(format!(
                    "uncoupled local kernel of agent {} is not supplied",
                    i + 1
                ))
            })?;
            agent.local_kernels = vec![local; agent.n_actions];
        }
        Ok(out)
    }
}

/// A validation finding: where and what.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub location: String,
    pub message: String,
}

impl Violation {
    fn new(location: impl Into<String>, message: impl Into<String>) -> Self {
        Violation {
            location: location.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

fn check_kernel(
    out: &mut Vec<Violation>,
    name: &str,
    kernel: &StochasticKernel,
    rows: usize,
    cols: usize,
    row_label: &dyn Fn(usize) -> String,
) {
    if kernel.rows() != rows || kernel.cols() != cols {
        out.push(Violation::new(
            name,
            format!(
                "shape {}x{} but expected {rows}x{cols}",
                kernel.rows(),
                kernel.cols()
            ),
        ));
        return;
    }
    for defect in kernel.defects() {
        let v = match defect {
            RowDefect::Negative { row, col, value } => Violation::new(
                format!("{name} {}", row_label(row)),
                format!("negative probability {value} in column {}", col + 1),
            ),
            RowDefect::NotFinite { row, col } => Violation::new(
                format!("{name} {}", row_label(row)),
                format!("non-finite entry in column {}", col + 1),
            ),
            RowDefect::RowSum { row, sum } => Violation::new(
                format!("{name} {}", row_label(row)),
                format!("row sum {sum} ≠ 1"),
            ),
        };
        out.push(v);
    }
}

/// Checks every structural and probabilistic invariant of a game.
pub fn validate_spec(spec: &GameSpec) -> ValidationReport {
    let mut v = Vec::new();
    if spec.n_env == 0 {
        v.push(Violation::new("n_env", "environment must have at least one state"));
    }
    if spec.agents.is_empty() {
        v.push(Violation::new("agents", "game must have at least one agent"));
    }
    let dims = spec.action_dims();
    let expected = spec.joint_action_count();
    if spec.env_kernels.len() != expected {
        v.push(Violation::new(
            "env_kernels",
            format!(
                "{} kernels but {expected} joint actions",
                spec.env_kernels.len()
            ),
        ));
    }
    let w_label = |r: usize| format!("row w={}", r + 1);
    for (flat, k) in spec.env_kernels.iter().enumerate() {
        let label = if dims.iter().all(|&d| d > 0) && flat < expected {
            joint_action_label(&unflatten_with(&dims, flat))
        } else {
            format!("#{}", flat + 1)
        };
        check_kernel(
            &mut v,
            &format!("Φ(a={label})"),
            k,
            spec.n_env,
            spec.n_env,
            &w_label,
        );
    }
    if let Some(u) = &spec.uncoupled_env {
        check_kernel(&mut v, "Φ_U", u, spec.n_env, spec.n_env, &w_label);
    }

    for (i, agent) in spec.agents.iter().enumerate() {
        let tag = format!("agent {}", i + 1);
        for (name, val) in [
            ("n_states", agent.n_states),
            ("n_actions", agent.n_actions),
            ("n_signals", agent.n_signals),
            ("n_memory", agent.n_memory),
        ] {
            if val == 0 {
                v.push(Violation::new(format!("{tag} {name}"), "must be positive"));
            }
        }
        check_kernel(
            &mut v,
            &format!("{tag} M"),
            &agent.signal_kernel,
            spec.n_env,
            agent.n_signals,
            &w_label,
        );
        let ns = agent.n_signals.max(1);
        let xs_label = |r: usize| format!("row (x={}, s={})", r / ns + 1, r % ns + 1);
        if agent.local_kernels.len() != agent.n_actions {
            v.push(Violation::new(
                format!("{tag} local_kernels"),
                format!(
                    "{} kernels but {} actions",
                    agent.local_kernels.len(),
                    agent.n_actions
                ),
            ));
        }
        for (a, k) in agent.local_kernels.iter().enumerate() {
            check_kernel(
                &mut v,
                &format!("{tag} φ(a={})", a + 1),
                k,
                agent.n_states * agent.n_signals,
                agent.n_states,
                &xs_label,
            );
        }
        if let Some(u) = &agent.uncoupled_local {
            check_kernel(
                &mut v,
                &format!("{tag} φ_U"),
                u,
                agent.n_states * agent.n_signals,
                agent.n_states,
                &xs_label,
            );
        }
        let rule = &agent.memory_rule;
        if rule.n_memory() != agent.n_memory || rule.n_signals() != agent.n_signals {
            v.push(Violation::new(
                format!("{tag} memory_rule"),
                format!(
                    "shape {}x{} but expected {}x{}",
                    rule.n_memory(),
                    rule.n_signals(),
                    agent.n_memory,
                    agent.n_signals
                ),
            ));
        } else {
            for z in 0..rule.n_memory() {
                for s in 0..rule.n_signals() {
                    let next = rule.apply(z, s);
                    if next >= agent.n_memory {
                        v.push(Violation::new(
                            format!("{tag} memory_rule (z={}, s={})", z + 1, s + 1),
                            format!("next memory {} outside 1..={}", next + 1, agent.n_memory),
                        ));
                    }
                }
            }
        }
        if agent.reward.dims() != (agent.n_states, agent.n_actions, agent.n_signals) {
            let (x, a, s) = agent.reward.dims();
            v.push(Violation::new(
                format!("{tag} reward"),
                format!(
                    "shape {x}x{a}x{s} but expected {}x{}x{}",
                    agent.n_states, agent.n_actions, agent.n_signals
                ),
            ));
        } else if agent.reward.data().iter().any(|g| !g.is_finite()) {
            v.push(Violation::new(format!("{tag} reward"), "non-finite reward"));
        }
        if !(agent.discount > 0.0 && agent.discount < 1.0) {
            v.push(Violation::new(
                format!("{tag} discount"),
                format!("discount {} outside (0,1)", agent.discount),
            ));
        }
        if !(agent.temperature > 0.0 && agent.temperature.is_finite()) {
            v.push(Violation::new(
                format!("{tag} temperature"),
                format!("temperature {} must be positive", agent.temperature),
            ));
        }
    }
    ValidationReport { violations: v }
}

/// Fails with [`EeeError::InvalidSpec`] unless the game validates.
pub fn ensure_valid(spec: &GameSpec) -> Result<()> {
    let report = validate_spec(spec);
    if report.is_ok() {
        Ok(())
    } else {
        Err(EeeError::InvalidSpec(report.violations))
    }
}

/// A game whose kernels interpolate between coupled and uncoupled ones:
/// `Φ(a) = αΦ_C(a) + (1−α)Φ_U` and likewise for every `φ_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexFamily {
    base: GameSpec,
}

impl ConvexFamily {
    /// `base` holds the coupled kernels as its action kernels together with
    /// the uncoupled references.
    pub fn new(base: GameSpec) -> Result<Self> {
        if !base.has_references() {
            return Err(EeeError::MissingReference(
                "a convex family needs the uncoupled kernels Φ_U and φ_U of every agent".into(),
            ));
        }
        Ok(ConvexFamily { base })
    }

    pub fn base(&self) -> &GameSpec {
        &self.base
    }

    pub fn interpolate(&self, alpha: f64) -> Result<GameSpec> {
        interpolate(self, alpha)
    }
}

pub fn interpolate(family: &ConvexFamily, alpha: f64) -> Result<GameSpec> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(EeeError::Domain(format!("alpha {alpha} outside [0,1]")));
    }
    let base = &family.base;
    let env_u = base.uncoupled_env.as_ref().expect("checked in ConvexFamily::new");
    let mut out = base.clone();
    out.env_kernels = base
        .env_kernels
        .iter()
        .map(|k| k.blend(env_u, alpha))
        .collect::<Result<_>>()?;
    for agent in &mut out.agents {
        let u = agent.uncoupled_local.as_ref().expect("checked in ConvexFamily::new");
        agent.local_kernels = agent
            .local_kernels
            .iter()
            .map(|k| k.blend(u, alpha))
            .collect::<Result<_>>()?;
    }
    Ok(out)
}

/// A joint state `ψ = (w, z, x)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct JointState {
    pub w: usize,
    pub z: Vec<usize>,
    pub x: Vec<usize>,
}

/// Mixed-radix bijection between joint states / joint actions and flat
/// indices. The environment state is the most significant digit, followed
/// by the memories and then the local states of agents 1..n; the last
/// digit varies fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct JointIndexer {
    n_env: usize,
    memory: Vec<usize>,
    states: Vec<usize>,
    actions: Vec<usize>,
    dims: Vec<usize>,
    size: usize,
    action_count: usize,
}

impl JointIndexer {
    pub fn new(
        n_env: usize,
        memory: Vec<usize>,
        states: Vec<usize>,
        actions: Vec<usize>,
    ) -> Result<Self> {
        if memory.len() != states.len() || memory.len() != actions.len() {
            return Err(EeeError::Structural("per-agent dimension lists differ in length".into()));
        }
        let dims: Vec<usize> = std::iter::once(n_env)
            .chain(memory.iter().copied())
            .chain(states.iter().copied())
            .collect();
        let size = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or(EeeError::TooLarge(usize::MAX))?;
        if size > MAX_JOINT_STATES {
            return Err(EeeError::TooLarge(size));
        }
        let action_count = actions.iter().product();
        Ok(JointIndexer {
            n_env,
            memory,
            states,
            actions,
            dims,
            size,
            action_count,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.memory.len()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_env(&self) -> usize {
        self.n_env
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    /// Stride of each digit in [`Self::dims`] order.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dims.len()];
        for k in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.dims[k + 1];
        }
        strides
    }

    pub fn flatten(&self, psi: &JointState) -> usize {
        let n = self.n_agents();
        let mut idx = psi.w;
        for i in 0..n {
            idx = idx * self.memory[i] + psi.z[i];
        }
        for i in 0..n {
            idx = idx * self.states[i] + psi.x[i];
        }
        idx
    }

    pub fn unflatten(&self, idx: usize) -> JointState {
        let n = self.n_agents();
        let mut psi = JointState {
            w: 0,
            z: vec![0; n],
            x: vec![0; n],
        };
        self.unflatten_into(idx, &mut psi);
        psi
    }

    pub fn unflatten_into(&self, mut idx: usize, psi: &mut JointState) {
        let n = self.n_agents();
        for i in (0..n).rev() {
            psi.x[i] = idx % self.states[i];
            idx /= self.states[i];
        }
        for i in (0..n).rev() {
            psi.z[i] = idx % self.memory[i];
            idx /= self.memory[i];
        }
        psi.w = idx;
    }

    pub fn flatten_action(&self, a: &[usize]) -> usize {
        a.iter()
            .zip(&self.actions)
            .fold(0, |acc, (&ai, &d)| acc * d + ai)
    }

    pub fn unflatten_action(&self, idx: usize) -> Vec<usize> {
        unflatten_with(&self.actions, idx)
    }
}

fn unflatten_with(dims: &[usize], mut idx: usize) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for i in (0..dims.len()).rev() {
        out[i] = idx % dims[i];
        idx /= dims[i];
    }
    out
}

/// `"a1,a2,…"` with 1-based actions, as used for file keys and messages.
pub fn joint_action_label(a: &[usize]) -> String {
    a.iter()
        .map(|ai| (ai + 1).to_string())
        .collect::<Vec<_>>()
        .join(",")
}
